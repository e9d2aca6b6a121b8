// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <string>

#include "xlmimo/types.hpp"

namespace xlmimo
{

// Binary layout (little-endian):
//   "XLMX" | u32 version = 1 | u64 rows | u64 cols | f64 wavelength | rows*cols (re, im) f64 pairs, row-major
// Text layout:
//   "xlmimo-matrix 1 <rows> <cols> <wavelength>" then one line per row of "re im re im ...".
enum class MatrixFormat
{
    binary,
    text
};

struct MatrixFile
{
    CMat matrix;
    double wavelength = 0.0; // 0 when not meaningful (combiners, dictionaries)
};

void write_matrix(const std::string &path, const CMat &m, double wavelength = 0.0,
                  MatrixFormat format = MatrixFormat::binary);

/// Detects the format from the leading bytes. Throws io on malformed input.
MatrixFile read_matrix(const std::string &path);

} // namespace xlmimo
