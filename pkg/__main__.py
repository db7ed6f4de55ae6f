"""
Compatibility entry point for the CLI application.

Standard Python entry point for module execution: python -m spinsq
while delegating to the src.cli.main module.
"""

if __name__ == "__main__":
    import sys

    from src.cli.main import main

    sys.exit(main())
