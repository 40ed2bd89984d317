#pragma once

// Matrix file formats.
//
// Text:   first line "rows cols", then `rows` lines of `cols` whitespace
//         separated decimals. Blank lines and lines starting with '#' are
//         ignored.
// Binary: two little-endian uint64 (rows, cols) followed by rows*cols
//         little-endian IEEE-754 doubles in row-major order.
//
// Both readers throw InputError (with the file name, and the line number for
// text) on a dimension mismatch or an unparsable value.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cdskit/types.hpp"

namespace cdskit::io {

Matrix read_text_matrix(std::istream& in, const std::string& source_name = "<stream>");
void write_text_matrix(std::ostream& out, const Matrix& m);

Matrix read_binary_matrix(std::istream& in, const std::string& source_name = "<stream>");
void write_binary_matrix(std::ostream& out, const Matrix& m);

/// Chooses the binary reader for a ".bin" extension, text otherwise.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Whitespace-separated integers (e.g. class labels, pixel counts).
std::vector<long> read_integer_list(const std::filesystem::path& path);
void write_integer_list(const std::filesystem::path& path, const std::vector<long>& values);

}  // namespace cdskit::io
