"""
Entry point for running sqn-control as a module.

    python -m sqn_control
"""

from sqn_control.cli import main

if __name__ == "__main__":
    main()
