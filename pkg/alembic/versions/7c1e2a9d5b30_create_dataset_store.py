"""Create dataset store

Revision ID: 7c1e2a9d5b30
Revises: 
Create Date: 2026-10-18 10:12:31.204117

"""
from typing import Sequence, Union

from alembic import op
import sqlalchemy as sa


# revision identifiers, used by Alembic.
revision: str = '7c1e2a9d5b30'
down_revision: Union[str, Sequence[str], None] = None
branch_labels: Union[str, Sequence[str], None] = None
depends_on: Union[str, Sequence[str], None] = None


def upgrade() -> None:
    """Upgrade schema."""
    op.create_table(
        'datasets',
        sa.Column('id', sa.String(), nullable=False),
        sa.Column('name', sa.String(), nullable=False),
        sa.Column('source_name', sa.String(), nullable=False),
        sa.Column('total_rows', sa.Integer(), nullable=False),
        sa.Column('accepted_rows', sa.Integer(), nullable=False),
        sa.Column('rejected_rows', sa.Integer(), nullable=False),
        sa.Column('ingested_at', sa.DateTime(), nullable=False),
        sa.PrimaryKeyConstraint('id'),
    )
    op.create_index(op.f('ix_datasets_name'), 'datasets', ['name'], unique=False)

    op.create_table(
        'study_records',
        sa.Column('id', sa.Integer(), autoincrement=True, nullable=False),
        sa.Column('dataset_id', sa.String(), nullable=False),
        sa.Column('position', sa.Integer(), nullable=False),
        sa.Column('project', sa.String(), nullable=False),
        sa.Column('study', sa.String(), nullable=False),
        sa.Column('ro', sa.Float(), nullable=True),
        sa.Column('no', sa.Integer(), nullable=True),
        sa.Column('rr', sa.Float(), nullable=True),
        sa.Column('nr', sa.Integer(), nullable=True),
        sa.Column('po', sa.Float(), nullable=True),
        sa.Column('pr', sa.Float(), nullable=True),
        sa.Column('c', sa.Float(), nullable=True),
        sa.ForeignKeyConstraint(['dataset_id'], ['datasets.id'], ondelete='CASCADE'),
        sa.PrimaryKeyConstraint('id'),
    )
    op.create_index(op.f('ix_study_records_dataset_id'), 'study_records', ['dataset_id'], unique=False)
    op.create_index(op.f('ix_study_records_project'), 'study_records', ['project'], unique=False)

    op.create_table(
        'rejected_rows',
        sa.Column('id', sa.Integer(), autoincrement=True, nullable=False),
        sa.Column('dataset_id', sa.String(), nullable=False),
        sa.Column('line', sa.Integer(), nullable=False),
        sa.Column('message', sa.Text(), nullable=False),
        sa.ForeignKeyConstraint(['dataset_id'], ['datasets.id'], ondelete='CASCADE'),
        sa.PrimaryKeyConstraint('id'),
    )
    op.create_index(op.f('ix_rejected_rows_dataset_id'), 'rejected_rows', ['dataset_id'], unique=False)


def downgrade() -> None:
    """Downgrade schema."""
    op.drop_index(op.f('ix_rejected_rows_dataset_id'), table_name='rejected_rows')
    op.drop_table('rejected_rows')
    op.drop_index(op.f('ix_study_records_project'), table_name='study_records')
    op.drop_index(op.f('ix_study_records_dataset_id'), table_name='study_records')
    op.drop_table('study_records')
    op.drop_index(op.f('ix_datasets_name'), table_name='datasets')
    op.drop_table('datasets')
