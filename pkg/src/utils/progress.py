import sys

from tqdm import tqdm


def progress(iterable, verbose: bool, **kwargs):
    """tqdm bar on stderr, shown only when verbose and attached to a terminal."""
    return tqdm(iterable, disable=not verbose or not sys.stderr.isatty(), **kwargs)
