import logging
import sys
from pathlib import Path
from typing import List, Optional

import cli

_LOGGER = logging.getLogger(__name__)


def configure_logging(verbose: bool = False, log_file: Optional[Path] = None):
    """Log records go to stderr so stdout stays machine-readable."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file is not None:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(
        format='%(asctime)s,%(msecs)d %(levelname)s %(name)s %(message)s',
        datefmt='%H:%M:%S',
        level=logging.DEBUG if verbose else logging.WARNING,
        handlers=handlers,
        force=True,
    )


def run(argv: Optional[List[str]] = None) -> int:
    args = cli.parse_args(argv)
    configure_logging(args.verbose, args.log_file)
    _LOGGER.debug(f'Running {args.command}')
    return cli.run(args)


if __name__ == '__main__':
    sys.exit(run())
