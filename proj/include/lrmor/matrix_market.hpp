// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "lrmor/lti_system.hpp"

namespace lrmor
{

/// Unreadable, missing or malformed file.
class IoError : public Error
{
public:
    using Error::Error;
};

/// Reads a real Matrix Market file. Coordinate files may be general or
/// symmetric; duplicate entries are summed. Array files are accepted too.
SparseMatrix<double> read_mm_sparse(const std::string& path);

/// Reads a real Matrix Market file (array or coordinate) as a dense matrix.
Matrix<double> read_mm_dense(const std::string& path);

/// Coordinate general format, 17 significant digits.
void write_mm(const std::string& path, const SparseMatrix<double>& M);

/// Array general format (column-major), 17 significant digits.
void write_mm(const std::string& path, const Matrix<double>& M);

/// Assembles a system from files; empty paths for E and D mean identity and zero.
LtiSystemd read_system(const std::string& A, const std::string& B, const std::string& C,
                       const std::string& E = {}, const std::string& D = {});

} // namespace lrmor
