# SPDX-License-Identifier: LGPL-2.1+
import contextlib
import io
import os
import tempfile
import unittest

from boolreg import helpers


class TestHelpers(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_bits_to_str(self):
        self.assertEqual(helpers.bits_to_str([1, 0, 0, 1]), "1001")
        self.assertEqual(helpers.bits_to_str(()), "")

    def test_atomic_write(self):
        path = os.path.join(self.tmp.name, "sub", "out.txt")
        with helpers.atomic_write(path) as f:
            f.write("done\n")
        with open(path) as f:
            self.assertEqual(f.read(), "done\n")

        with self.assertRaises(RuntimeError):
            with helpers.atomic_write(path) as f:
                f.write("partial")
                raise RuntimeError("interrupted")
        with open(path) as f:
            self.assertEqual(f.read(), "done\n")
        self.assertEqual(os.listdir(os.path.dirname(path)), ["out.txt"])

    def test_open_output_stdout(self):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            with helpers.open_output("-") as f:
                f.write("x")
        self.assertEqual(out.getvalue(), "x")
        self.assertFalse(out.closed)

    def test_fatal(self):
        err = io.StringIO()
        helpers.set_fatal_behavior("raise")
        try:
            with contextlib.redirect_stderr(err), self.assertRaises(helpers.FatalException) as cm:
                helpers.fatal("broken", code=helpers.EXIT_DATA, color=False)
        finally:
            helpers.set_fatal_behavior("exit")
        self.assertEqual(cm.exception.code, helpers.EXIT_DATA)
        self.assertEqual(err.getvalue(), "fatal: broken\n")

        with contextlib.redirect_stderr(err), self.assertRaises(SystemExit) as cm:
            helpers.fatal("gone", color=False)
        self.assertEqual(cm.exception.code, helpers.EXIT_USAGE)


if __name__ == "__main__":
    unittest.main()
