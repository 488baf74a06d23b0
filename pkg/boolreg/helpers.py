# SPDX-License-Identifier: LGPL-2.1+

import logging
import pathlib
import sys
import tempfile
from contextlib import contextmanager, nullcontext

debug_run = False
log_color = (False, True, True)
fatal_behavior = "exit"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MODEL = 3
EXIT_INTERRUPTED = 130


def get_debugging():
    return debug_run


def set_debugging(val):
    global debug_run
    debug_run = val
    logging.getLogger("boolreg").setLevel(logging.DEBUG if val else logging.WARNING)


def set_fatal_behavior(s):
    global fatal_behavior
    fatal_behavior = s


def log_enable_color(stdout, stderr):
    global log_color
    log_color = (False, stdout, stderr)


def setup_logging(verbose=False):
    level = logging.DEBUG if debug_run else (logging.INFO if verbose else logging.WARNING)
    logging.basicConfig(format="%(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("boolreg").setLevel(level)


# Like open(), but reserves file == "-", file == "" or file == None for stdin
def open_or_stdin(file, *args, **kwargs):
    if not file or file == "-":
        # we can't simply return sys.stdin as a file object may be used
        # as a context manager, so f would implicitely be closed and fail
        # a second call. We never want to implicitely close stdin
        kwargs["closefd"] = False
        return open(sys.stdin.fileno(), *args, **kwargs)

    return open(file, *args, **kwargs)


@contextmanager
def atomic_write(path, mode="w"):
    """
    Open a temporary file next to ``path`` and move it over ``path`` once the
    ``with`` block finishes without error.

    The temporary file lives in the same directory so the final replace is
    atomic. On error the partial file is removed and ``path`` is untouched.
    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    f = tempfile.NamedTemporaryFile(mode=mode, delete=False, dir=path.parent, prefix=f".{path.name}.")
    try:
        yield f
    except BaseException:
        f.close()
        pathlib.Path(f.name).unlink()
        raise
    else:
        f.close()
        pathlib.Path(f.name).replace(path)


def open_output(path, mode="w"):
    """``sys.stdout`` (left open) for "-" or no path, otherwise ``atomic_write(path)``."""
    if not path or path == "-":
        return nullcontext(sys.stdout)
    return atomic_write(path, mode)


class ConfigError(Exception):
    """Invalid configuration value or file"""


class FatalException(Exception):
    """Fatal exception, can't continue"""

    def __init__(self, msg="", code=EXIT_USAGE):
        super().__init__(msg)
        self.code = code


STDOUT_FILENO = 1
STDERR_FILENO = 2

COLOR_RED = "\033[31m"
COLOR_YELLOW = "\033[33m"
COLOR_WHITE = "\033[0;1;39m"
COLOR_RESET = "\033[0m"
COLOR_NONE = ""


def print_color(color, prefix, s, *args, **kwargs):
    end = kwargs.pop("end", "\n")
    print(color + prefix, s, *args, end=(COLOR_RESET if color else COLOR_NONE) + end, **kwargs)


def info(s, *args, **kwargs):
    color = COLOR_WHITE if kwargs.pop("color", log_color[STDOUT_FILENO]) else COLOR_NONE
    print_color(color, "‣", s, *args, **kwargs)


def fatal(s, *args, code=EXIT_USAGE, **kwargs):
    color = COLOR_RED if kwargs.pop("color", log_color[STDERR_FILENO]) else COLOR_NONE
    kwargs.setdefault("file", sys.stderr)
    print_color(color, "fatal:", s, *args, **kwargs)
    if fatal_behavior == "exit":
        sys.exit(code)
    raise FatalException(s, code)


def error(s, *args, **kwargs):
    color = COLOR_RED if kwargs.pop("color", log_color[STDERR_FILENO]) else COLOR_NONE
    kwargs.setdefault("file", sys.stderr)
    print_color(color, "error:", s, *args, **kwargs)


def warn(s, *args, **kwargs):
    color = COLOR_YELLOW if kwargs.pop("color", log_color[STDERR_FILENO]) else COLOR_NONE
    kwargs.setdefault("file", sys.stderr)
    print_color(color, "warning:", s, *args, **kwargs)


def bits_to_str(bits):
    return "".join("1" if b else "0" for b in bits)
