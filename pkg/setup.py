#!/usr/bin/python3
# SPDX-License-Identifier: LGPL-2.1+

from os import path as op
from setuptools import setup
from boolreg import __version__

import pathlib
import os
import sys

HERE = pathlib.Path(__file__).parent
README = (HERE / "README.md").read_text()

if sys.version_info < (3, 8):
    sys.exit("Sorry, we need at least Python 3.8.x")

# installing to user dir or inside virtualenv
if ("install" in sys.argv and "--user" in sys.argv) or sys.base_prefix != sys.prefix:
    # this is not a standard location, the user still needs to source the file,
    # but at least it's installed somewhere we can document
    datadir = os.environ.get("XDG_DATA_HOME", op.join(op.expanduser("~"), ".local", "share"))
    bash_completion_dir = op.join(datadir, "boolreg", "bash_completion")
else:
    bash_completion_dir = "/etc/bash_completion.d"

if "BASH_COMPLETION_DIR" in os.environ:
    bash_completion_dir = os.environ["BASH_COMPLETION_DIR"]

setup(
    name="boolreg",
    zip_safe=False,
    version=__version__,
    description="Boolean symbolic regression with transformers",
    long_description=README,
    long_description_content_type="text/markdown",
    maintainer="boolreg contributors",
    include_package_data=True,
    license="LGPLv2+",
    scripts=["bin/boolreg"],
    classifiers=[
        "Intended Audience :: Science/Research",
        "License :: OSI Approved",
        "Programming Language :: Python",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Operating System :: POSIX",
        "Operating System :: Unix",
    ],
    packages=["boolreg"],
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "torch>=2.0",
        "pandas>=1.4",
        "scikit-learn>=1.0",
    ],
    extras_require={
        "tests": ["coverage~=6.5"],
        "completion": ["argcomplete"],
    },
    data_files=[
        (bash_completion_dir, ["extra/boolreg-complete.sh"]),
    ],
    platforms="any",
)
