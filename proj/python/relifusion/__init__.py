# Copyright 2026 The ReliFusion Authors
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

"""Confidence-weighted lidar-camera BEV fusion: python surface.

The compiled extension lives at relifusion._core when installed as a wheel;
in-tree test runs import it straight from the CMake build directory.
"""

try:
    from relifusion._core import *  # noqa: F401,F403
    from relifusion import _core  # noqa: F401
except ImportError:  # in-tree build: module on sys.path directly
    from _core import *  # noqa: F401,F403
    import _core  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
