"""
Replisum - Command Line Entry Point

Run `python cli.py --help` for the list of commands.
"""

from src.cli import main

if __name__ == "__main__":
    main()
