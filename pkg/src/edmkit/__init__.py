# This file intentionally left blank to indicate that this directory is a package.
