import sys
import traceback
from typing import List, Optional

from app import QSUApp, build_parser


def handle_exception(exc_type, exc_value, exc_traceback):
    """
    Global exception handler for anything the command handlers did not catch.

    Prints the diagnostic and traceback to stderr.
    """
    if issubclass(exc_type, KeyboardInterrupt):
        sys.__excepthook__(exc_type, exc_value, exc_traceback)
        return

    print(f"Fatal error: {exc_value}", file=sys.stderr)
    traceback.print_exception(exc_type, exc_value, exc_traceback)


def main(argv: Optional[List[str]] = None) -> int:
    """Application entry point; returns the process exit code."""
    sys.excepthook = handle_exception
    args = build_parser().parse_args(argv)

    try:
        app = QSUApp(config_file=args.config, log_level=args.log_level)
        return app.dispatch(args)

    except Exception:
        handle_exception(*sys.exc_info())
        return 1


if __name__ == "__main__":
    sys.exit(main())
