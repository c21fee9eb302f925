# Copyright 2026 The pgap Authors.
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

"""Zeroth-order optimization with gradient-aligned low-rank perturbations."""

from pgap._core import (
    ConfigError,
    DimensionError,
    IoError,
    NumericError,
    ParseError,
    PgapError,
    StateError,
    derive_seed,
    frob_inner,
    frob_norm,
    gaussian_matrix,
    lab,
    lab_suites,
    lift,
    project_lowdim,
    resolve_config,
    train,
    truncated_svd,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "IoError",
    "NumericError",
    "ParseError",
    "PgapError",
    "StateError",
    "derive_seed",
    "frob_inner",
    "frob_norm",
    "gaussian_matrix",
    "lab",
    "lab_suites",
    "lift",
    "project_lowdim",
    "resolve_config",
    "train",
    "truncated_svd",
]
