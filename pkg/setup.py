# coding=utf-8

exec(open("ratelesscast/__version.py").read())

########################################################################################################################
### Package variables

# The python package
package = "ratelesscast"

# Human readable name
name = "ratelesscast"

version = __version__

description = """Slot-level simulator of rateless-coded unicast and multicast downlink scheduling."""

author = "ratelesscast developers"

license = "AGPLv3"

requires = [
    "numpy",
    "scipy>=1.6",
    "pyyaml",
    "click",
]

tests_require = [
    "pytest>=4.0",
    "pytest-datafiles>=2.0",
    "hypothesis",
]

# Additional parameters for the call to setuptools.setup.
additional_setup_parameters = {
    "entry_points": {"console_scripts": ["ratelesscast = ratelesscast.cli:cli"]},
    "extras_require": {"test": tests_require},
}

########################################################################################################################

from setuptools import setup, find_packages

setup_parameters = dict(
    name=name,
    version=version,
    description=description,
    author=author,
    license=license,
    packages=find_packages(include=[package, package + ".*"]),
    install_requires=requires,
    python_requires=">=3.7",
)

if len(additional_setup_parameters):
    setup_parameters.update(additional_setup_parameters)

setup(**setup_parameters)
