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

#include "xlmimo/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace xlmimo
{

namespace
{

static_assert(std::endian::native == std::endian::little, "binary matrix files assume a little-endian host");

constexpr char magic[4] = {'X', 'L', 'M', 'X'};
constexpr std::uint32_t version = 1;

template <class T> void put(std::ostream &os, T v)
{
    os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <class T> T get(std::istream &is)
{
    T v{};
    if (!is.read(reinterpret_cast<char *>(&v), sizeof(T)))
        throw Error(ErrorCode::io, "truncated matrix file");
    return v;
}

} // namespace

void write_matrix(const std::string &path, const CMat &m, double wavelength, MatrixFormat format)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(ErrorCode::io, "cannot open " + path + " for writing");
    if (format == MatrixFormat::binary)
    {
        os.write(magic, 4);
        put<std::uint32_t>(os, version);
        put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
        put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
        put<double>(os, wavelength);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
            {
                put<double>(os, m(r, c).real());
                put<double>(os, m(r, c).imag());
            }
    }
    else
    {
        os << std::setprecision(17);
        os << "xlmimo-matrix " << version << ' ' << m.rows() << ' ' << m.cols() << ' ' << wavelength << '\n';
        for (Eigen::Index r = 0; r < m.rows(); ++r)
        {
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                os << (c ? " " : "") << m(r, c).real() << ' ' << m(r, c).imag();
            os << '\n';
        }
    }
    if (!os)
        throw Error(ErrorCode::io, "write failed for " + path);
}

MatrixFile read_matrix(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(ErrorCode::io, "cannot open " + path);
    char head[4] = {};
    is.read(head, 4);
    if (!is)
        throw Error(ErrorCode::io, "truncated matrix file " + path);

    MatrixFile out;
    if (std::memcmp(head, magic, 4) == 0)
    {
        if (get<std::uint32_t>(is) != version)
            throw Error(ErrorCode::io, "unsupported matrix file version in " + path);
        const auto rows = get<std::uint64_t>(is);
        const auto cols = get<std::uint64_t>(is);
        out.wavelength = get<double>(is);
        out.matrix.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < out.matrix.rows(); ++r)
            for (Eigen::Index c = 0; c < out.matrix.cols(); ++c)
            {
                const double re = get<double>(is);
                const double im = get<double>(is);
                out.matrix(r, c) = cd(re, im);
            }
        return out;
    }

    is.seekg(0);
    std::string tag;
    std::uint32_t ver = 0;
    long long rows = -1;
    long long cols = -1;
    if (!(is >> tag >> ver >> rows >> cols >> out.wavelength) || tag != "xlmimo-matrix" || ver != version || rows < 0 ||
        cols < 0)
        throw Error(ErrorCode::io, "unrecognized matrix file header in " + path);
    out.matrix.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
        {
            double re = 0.0;
            double im = 0.0;
            if (!(is >> re >> im))
                throw Error(ErrorCode::io, "truncated matrix text in " + path);
            out.matrix(r, c) = cd(re, im);
        }
    return out;
}

} // namespace xlmimo
