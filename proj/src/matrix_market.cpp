// SPDX-License-Identifier: Apache-2.0
#include "lrmor/matrix_market.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lrmor
{

namespace
{

struct Header
{
    bool coordinate = true;
    bool symmetric = false;
    Index rows = 0;
    Index cols = 0;
    Index entries = 0;
};

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw IoError(path + ": " + what);
}

Header read_header(std::istream& in, const std::string& path)
{
    std::string line;
    if (!std::getline(in, line))
    {
        fail(path, "empty file");
    }
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || lower(object) != "matrix")
    {
        fail(path, "missing %%MatrixMarket matrix banner");
    }
    Header h;
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (format == "coordinate")
    {
        h.coordinate = true;
    }
    else if (format == "array")
    {
        h.coordinate = false;
    }
    else
    {
        fail(path, "unknown format '" + format + "'");
    }
    if (field != "real" && field != "integer" && field != "double")
    {
        fail(path, "only real matrices are supported");
    }
    if (symmetry == "symmetric")
    {
        h.symmetric = true;
    }
    else if (symmetry != "general")
    {
        fail(path, "unsupported symmetry '" + symmetry + "'");
    }

    while (std::getline(in, line))
    {
        if (!line.empty() && line[0] != '%' && line.find_first_not_of(" \t\r") != std::string::npos)
        {
            break;
        }
    }
    std::istringstream size(line);
    if (h.coordinate)
    {
        size >> h.rows >> h.cols >> h.entries;
    }
    else
    {
        size >> h.rows >> h.cols;
        h.entries = h.rows * h.cols;
    }
    if (!size || h.rows < 0 || h.cols < 0 || h.entries < 0)
    {
        fail(path, "malformed size line");
    }
    if (h.symmetric && h.rows != h.cols)
    {
        fail(path, "symmetric matrix must be square");
    }
    return h;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        fail(path, "cannot open file");
    }
    return in;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out)
    {
        fail(path, "cannot open file for writing");
    }
    return out;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename Sink>
void read_entries(std::istream& in, const std::string& path, const Header& h, Sink&& sink)
{
    if (h.coordinate)
    {
        for (Index k = 0; k < h.entries; ++k)
        {
            long long i = 0, j = 0;
            double v = 0;
            if (!(in >> i >> j >> v))
            {
                fail(path, "truncated coordinate data");
            }
            if (i < 1 || i > h.rows || j < 1 || j > h.cols)
            {
                fail(path, "entry index out of range");
            }
            sink(static_cast<Index>(i - 1), static_cast<Index>(j - 1), v);
            if (h.symmetric && i != j)
            {
                sink(static_cast<Index>(j - 1), static_cast<Index>(i - 1), v);
            }
        }
        return;
    }
    // Array data is column-major; symmetric arrays store the lower triangle.
    for (Index j = 0; j < h.cols; ++j)
    {
        for (Index i = h.symmetric ? j : 0; i < h.rows; ++i)
        {
            double v = 0;
            if (!(in >> v))
            {
                fail(path, "truncated array data");
            }
            sink(i, j, v);
            if (h.symmetric && i != j)
            {
                sink(j, i, v);
            }
        }
    }
}

} // namespace

SparseMatrix<double> read_mm_sparse(const std::string& path)
{
    std::ifstream in = open_in(path);
    const Header h = read_header(in, path);
    std::vector<Eigen::Triplet<double, int>> trips;
    trips.reserve(static_cast<std::size_t>(h.symmetric ? 2 * h.entries : h.entries));
    read_entries(in, path, h, [&](Index i, Index j, double v) {
        if (v != 0.0 || h.coordinate)
        {
            trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
        }
    });
    SparseMatrix<double> M(h.rows, h.cols);
    M.setFromTriplets(trips.begin(), trips.end());
    M.makeCompressed();
    return M;
}

Matrix<double> read_mm_dense(const std::string& path)
{
    std::ifstream in = open_in(path);
    const Header h = read_header(in, path);
    Matrix<double> M = Matrix<double>::Zero(h.rows, h.cols);
    read_entries(in, path, h, [&](Index i, Index j, double v) {
        if (h.coordinate)
        {
            M(i, j) += v;
        }
        else
        {
            M(i, j) = v;
        }
    });
    return M;
}

void write_mm(const std::string& path, const SparseMatrix<double>& M)
{
    std::ofstream out = open_out(path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << '\n';
    for (Index k = 0; k < M.outerSize(); ++k)
    {
        for (SparseMatrix<double>::InnerIterator it(M, k); it; ++it)
        {
            out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << fmt(it.value()) << '\n';
        }
    }
    if (!out)
    {
        fail(path, "write failed");
    }
}

void write_mm(const std::string& path, const Matrix<double>& M)
{
    std::ofstream out = open_out(path);
    out << "%%MatrixMarket matrix array real general\n";
    out << M.rows() << ' ' << M.cols() << '\n';
    for (Index j = 0; j < M.cols(); ++j)
    {
        for (Index i = 0; i < M.rows(); ++i)
        {
            out << fmt(M(i, j)) << '\n';
        }
    }
    if (!out)
    {
        fail(path, "write failed");
    }
}

LtiSystemd read_system(const std::string& A, const std::string& B, const std::string& C, const std::string& E,
                       const std::string& D)
{
    return make_system<double>(E.empty() ? SparseMatrix<double>() : read_mm_sparse(E), read_mm_sparse(A),
                               read_mm_dense(B), read_mm_dense(C), D.empty() ? Matrix<double>() : read_mm_dense(D));
}

} // namespace lrmor
