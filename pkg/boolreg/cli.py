# SPDX-License-Identifier: LGPL-2.1+
"""
This module provides two classes:

    1. ``BoolCLI``, which implements boolreg's CLI handling entry point with
       the ``argparse`` module.

    2. ``BoolCommand``, which must be subclassed to implement commands. The
       subclass must then be added to the ``BoolCLI`` instance with the method
       ``add_command()`` in order to be exposed to the user. That method creates
       a subparser for the command.

Example::

  >>> class FooBarCmd(BoolCommand):
  ...     '''
  ...     One-liner summary for the command.
  ...
  ...     Detailed description for the command goes in the subsequent
  ...     paragraphs.
  ...     '''
  ...
  ...     def init(self):
  ...         self.parser.add_argument("--foo", action="store_true")
  ...         self.parser.add_argument("--seed", type=int)
  ...
  ...     def run(self):
  ...         print(f"--foo={self.args.foo}")
  ...         print(f"seed={self.config.seed}")

  >>> cli = BoolCLI()
  >>> cli.add_command(FooBarCmd)
  >>> args = cli.parse_args(["foo-bar", "--foo", "--seed", "3"])
  >>> cli.run(args)
  --foo=True
  seed=3


Notes regarding ``BoolCommand`` subclasses:

  - The command name is automatically extracted from the class name,
    transforming the camel case into lowercase words separated by dashes. You
    can provide a custom name with the ``name`` class attribute.

  - The class' docstring is used by default as the ``description`` keyword for
    ``add_parser()``. The ``help`` keyword is its first line. Both can be
    overridden with the ``parser_description`` and ``parser_help`` class
    attributes.

  - Any class attribute with name prefixed by "parser_" will be passed as a
    keyword to the call to ``add_parser()``. For example, the value of
    ``parser_epilog`` will be passed as the ``epilog`` keyword.

  - Every command gets ``--config FILE``, ``--debug`` and ``--verbose``.
    Arguments whose ``dest`` is a configuration key (see ``Config.keys()``)
    and that are given on the command line override the file; declare them
    with ``default=None``.

  - There are two main methods expected to be implemented by subclasses:

    1. ``init()``: this is where initialization (like adding arguments) is done.
       This method is called when the command is added to a ``BoolCLI``
       instance.

    2. ``run()``: this is the method called by ``BoolCLI`` to run this
       command. Its return value is the exit code.

  - A ``BoolCommand`` instance has access to ``args``, ``config`` (both only
    inside ``run()``), ``cli`` and ``parser``.

"""
import argparse
import sys
import textwrap

from . import __version__
from . import config as configmod
from . import helpers


class BoolCommand:
    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        if not hasattr(cls, "name"):
            cls.name = cls.__default_cmd_name()

        if not hasattr(cls, "parser_description"):
            cls.parser_description = textwrap.dedent(cls.__doc__)

        if not hasattr(cls, "parser_help"):
            cls.parser_help, _, _ = cls.parser_description.strip().partition("\n")

    @classmethod
    def __default_cmd_name(cls):
        name = cls.__name__
        if name.endswith("Cmd"):
            name = name[:-3]
        name = name[0].lower() + "".join(f"-{c.lower()}" if c.isalpha() and c.isupper() else c for c in name[1:])
        return name

    def print_config_header(self):
        for line in self.config.dump():
            print(f"# {line}", file=sys.stderr)

    def run(self):
        raise NotImplementedError()


class BoolCLI:
    def __init__(self, config=None):
        self.config = config
        self.parser = argparse.ArgumentParser(
            prog="boolreg",
            description=BOOLREG_DESCRIPTION,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        self.parser.add_argument(
            "-V",
            "--version",
            action="version",
            version=f"boolreg {__version__}",
        )

        self.subparsers = self.parser.add_subparsers(title="Commands", dest="command")

    def add_command(self, cmd_cls):
        cmd = cmd_cls()

        parser_kw = {k[7:]: v for k, v in cmd_cls.__dict__.items() if k.startswith("parser_")}
        parser = self.subparsers.add_parser(cmd_cls.name, **parser_kw)

        cmd.parser = parser
        cmd.cli = self

        if hasattr(cmd, "init"):
            cmd.init()

        parser.add_argument("-c", "--config", help="Read configuration values from FILE", metavar="FILE", dest="config_file")
        parser.add_argument(
            "--debug",
            help="Turn on debugging output",
            action="store_true",
            default=False,
        )
        parser.add_argument(
            "--verbose",
            help="Show progress messages",
            action="store_true",
            default=False,
        )
        parser.set_defaults(cmd_object=cmd)
        return parser

    def parse_args(self, argv=sys.argv[1:]):
        return self.parser.parse_args(argv)

    def make_config(self, args):
        config = self.config or configmod.Config()
        if args.config_file:
            config.load(args.config_file)
        return config.overrides(args)

    def run(self, args):
        try:
            cmd = args.cmd_object
        except AttributeError:
            self.parser.print_help()
            return helpers.EXIT_USAGE

        # Save args.debug value, since args is mutable.
        enable_debug = args.debug
        saved_debug_flag = helpers.get_debugging()
        if enable_debug:
            helpers.set_debugging(True)
        helpers.setup_logging(args.verbose)

        if hasattr(cmd, "args"):
            raise Exception("command recursion not supported")

        cmd.args = args
        try:
            cmd.config = self.make_config(args)
            return cmd.run()
        finally:
            del cmd.args
            if hasattr(cmd, "config"):
                del cmd.config
            if enable_debug:
                helpers.set_debugging(saved_debug_flag)


BOOLREG_DESCRIPTION = """
Boolean symbolic regression

boolreg trains a transformer to map observations of a Boolean function (a
full truth table, or noisy samples of one) to a short formula over AND, OR
and NOT, and runs the experiments around it.

Typical session:

    boolreg gen-data --regime noiseless --count 1000 --out data.jsonl
    boolreg train --data on-the-fly --out run/
    boolreg predict --ckpt run/ --in 0001
    boolreg eval sweep --ckpt run/ --axis gates --out sweep.csv

Formulas are written in prefix notation, e.g. "or x_0 not x_1". Truth
tables list the outputs for all inputs in order, variable 0 being the most
significant bit.
"""
