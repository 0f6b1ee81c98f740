#-*- coding: utf-8 -*-

"""bits-lab setup

Installs the bitslab package and the bits-lab command. The presets and
the base configuration are copied to BITSLAB_INSTALL_PREFIX/etc when that
env is set before running "python3 setup.py install", otherwise they are
read from the source tree.
"""

import os
import inspect
import shutil
import setuptools


VERSION = '0.1.0'


def main():
    # setup packages
    setuptools.setup(
        version=VERSION,
        name='bits-lab',
        description=('Bidding Thompson sampling: adaptive ad experiments '
                     'in first- and second-price auctions.'),
        packages=setuptools.find_packages('.', exclude=[ 'tests',
                                                         'examples*' ]),
        install_requires=[
            'pyyaml',
            'numpy>=1.25',
            'scipy',
            'pandas',
            'matplotlib',
            'statsmodels',
        ],
        extras_require={
            'test': [ 'pytest' ],
        },
        entry_points={
            'console_scripts': [ 'bits-lab = bitslab.cli:main' ],
        },
        license='BSD 3-Clause',
        classifiers=[
            'Programming Language :: Python :: 3',
        ]
    )

    install_prefix = os.environ.get('BITSLAB_INSTALL_PREFIX')
    if install_prefix is None:
        return

    # determine the directory where setup.py is located
    pwd = os.path.abspath(
        os.path.split(inspect.getfile(inspect.currentframe()))[0])

    print('Creating directory topology...')
    for path in [
        os.path.join(install_prefix, 'etc', 'presets'),
        os.path.join(install_prefix, 'bin'),
            ]:
        os.makedirs(path, exist_ok=True)

    print('Copying dist configuration and executables...')
    for dirname in [ 'etc', os.path.join('etc', 'presets'), 'bin' ]:
        copy_files(os.path.join(pwd, dirname),
                   os.path.join(install_prefix, dirname))


def copy_files(src_dir, dst_dir):
    """Copy all files from src_dir to dst_dir"""
    src_files = os.listdir(src_dir)
    for file_name in src_files:
        full_file_name = os.path.join(src_dir, file_name)
        if (os.path.isfile(full_file_name)):
            shutil.copy(full_file_name, dst_dir)


if __name__ == '__main__':
    main()
