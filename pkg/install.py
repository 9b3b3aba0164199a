#!/usr/bin/env python3
# Copyright 2025 R5 Labs
# This file is part of the hslab toolkit.
#
# This software is provided "as is", without warranty of any kind,
# express or implied, including but not limited to the warranties
# of merchantability, fitness for a particular purpose and
# noninfringement. In no event shall the authors or copyright
# holders be liable for any claim, damages, or other liability,
# whether in an action of contract, tort or otherwise, arising
# from, out of or in connection with the software or the use or
# other dealings in the software.
#
# Installs hslab and its test extras. On Linux a virtual environment named
# hslab-venv is created first; elsewhere the running interpreter is used.

import sys
import subprocess
import os

VENV_DIR = "hslab-venv"


def install_python_dependencies():
    """
    Installs hslab with its test extras using the running Python.
    """
    print("Installing hslab from setup.py using the system Python...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", ".[tests]"])
        print("Python dependencies installed successfully.")
    except subprocess.CalledProcessError as e:
        print(f"Failed to install Python dependencies: {e}")
        sys.exit(e.returncode)


def setup_virtualenv():
    """
    Creates the 'hslab-venv' virtual environment and installs hslab inside it.
    """
    if not os.path.exists(VENV_DIR):
        print(f"Creating virtual environment in {VENV_DIR}...")
        subprocess.check_call([sys.executable, "-m", "venv", VENV_DIR])
    venv_python = os.path.join(VENV_DIR, "bin", "python")
    print("Installing hslab in the virtual environment...")
    try:
        subprocess.check_call([venv_python, "-m", "pip", "install", ".[tests]"])
    except subprocess.CalledProcessError as e:
        print(f"Failed to install Python dependencies: {e}")
        sys.exit(e.returncode)
    print("Virtual environment setup and dependencies installed successfully.")


def main():
    if sys.platform.startswith('linux'):
        setup_virtualenv()
    else:
        install_python_dependencies()
    print("All dependencies installed successfully.")


if __name__ == "__main__":
    main()
