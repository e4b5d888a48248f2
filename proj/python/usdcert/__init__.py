# Copyright 2026 The usdcert Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Certification of high-dimensional state ensembles by unambiguous discrimination."""

from pathlib import Path as _Path

from ._core import *  # noqa: F401,F403
from ._core import DEFAULT_FIDUCIAL_FILE as _BUILT_IN, __version__  # noqa: F401

_packaged = _Path(__file__).with_name("sic_fiducials.txt")
#: Fiducial file shipped with the package, or the one from the source tree.
FIDUCIAL_FILE = str(_packaged) if _packaged.exists() else _BUILT_IN


def sic_states(dim):
    """SIC ensemble of ``dim**2`` states from the shipped fiducial file."""
    fiducial = load_fiducial(dim, FIDUCIAL_FILE)  # noqa: F405
    if fiducial is None:
        fiducial, _ = find_sic_fiducial(dim)  # noqa: F405
    return wh_orbit(fiducial)  # noqa: F405
