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

import argparse
import os
import sys
import subprocess
import shutil
import time

VENV_DIR = "hslab-venv"

# --- virtual environment entry on Linux ---
if sys.platform.startswith("linux") and __name__ == "__main__":
    # If not running from the virtual environment, re-execute using it.
    if VENV_DIR not in sys.executable:
        venv_python = os.path.join(os.getcwd(), VENV_DIR, "bin", "python")
        if not os.path.exists(venv_python):
            print(f"Virtual environment '{VENV_DIR}' not found. Please run the install script first.")
            sys.exit(1)
        print(f"Entering virtual environment '{VENV_DIR}'...")
        os.execv(venv_python, [venv_python] + sys.argv)


def handle_error(msg):
    print(f"Error: {msg}")
    sys.exit(1)


def run_tests():
    print("Running the test suite...")
    result = subprocess.run([sys.executable, "-m", "pytest", "-q", "tests"], check=False)
    if result.returncode != 0:
        handle_error("Test suite failed.")
    print("Tests passed.")


def build_hslab():
    print("Building hslab executable...")
    cmd = [
        sys.executable,
        '-m',
        'PyInstaller',
        '--onefile',
        '--name', 'hslab',
        os.path.join('hslab', 'main.py'),
    ]
    print("Executing:", ' '.join(cmd))
    try:
        subprocess.check_call(cmd)
    except subprocess.CalledProcessError as e:
        handle_error(f"hslab build failed: {e}")
    print("hslab build completed successfully.")


def move_file(src, dst):
    """
    Moves a file from src to dst.
    """
    print(f"Moving file from {src} to {dst} ...")
    os.makedirs(os.path.dirname(dst), exist_ok=True)
    try:
        shutil.move(src, dst)
    except Exception as e:
        handle_error(f"Error moving file: {e}")
    print("File moved successfully.")


def parse_args():
    parser = argparse.ArgumentParser(
        description="hslab build script - test and package the hslab command line."
    )
    parser.add_argument("--skip-tests", action="store_true",
                        help="Build without running the test suite first.")
    return parser.parse_args()


def main():
    start = time.time()
    args = parse_args()
    if not args.skip_tests:
        run_tests()
    build_hslab()
    binary = "hslab.exe" if sys.platform.startswith("win") else "hslab"
    move_file(os.path.join("dist", binary), os.path.join("build", "bin", binary))
    end = time.time()
    print(f"\nhslab build finished in {end - start:.2f} seconds")


if __name__ == "__main__":
    main()
