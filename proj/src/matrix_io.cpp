#include "cdskit/matrix_io.hpp"

#include <bit>
#include <cmath>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace cdskit::io {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t to_little(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::big)
        return __builtin_bswap64(v);
    return v;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what)
{
    std::ostringstream msg;
    msg << source;
    if (line > 0)
        msg << ":" << line;
    msg << ": " << what;
    throw InputError(msg.str());
}

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no)
{
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        return true;
    }
    return false;
}

std::vector<double> parse_numbers(const std::string& line, const std::string& source, std::size_t line_no)
{
    std::vector<double> values;
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) {
        double v = 0.0;
        const auto* begin = token.data();
        const auto* end = token.data() + token.size();
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc() || ptr != end) {
            // from_chars rejects "inf"/"nan" spellings on some libstdc++ builds
            char* stop = nullptr;
            v = std::strtod(token.c_str(), &stop);
            if (stop == token.c_str() || *stop != '\0')
                fail(source, line_no, "cannot parse number '" + token + "'");
        }
        values.push_back(v);
    }
    return values;
}

}  // namespace

Matrix read_text_matrix(std::istream& in, const std::string& source_name)
{
    std::string line;
    std::size_t line_no = 0;
    if (!next_content_line(in, line, line_no))
        fail(source_name, 0, "empty matrix file");

    const auto header = parse_numbers(line, source_name, line_no);
    if (header.size() != 2 || header[0] < 0 || header[1] < 0 || header[0] != std::floor(header[0]) ||
        header[1] != std::floor(header[1]))
        fail(source_name, line_no, "header must be two non-negative integers 'rows cols'");
    const auto rows = static_cast<Eigen::Index>(header[0]);
    const auto cols = static_cast<Eigen::Index>(header[1]);

    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (!next_content_line(in, line, line_no))
            fail(source_name, line_no, "expected " + std::to_string(rows) + " rows, found " + std::to_string(r));
        const auto values = parse_numbers(line, source_name, line_no);
        if (static_cast<Eigen::Index>(values.size()) != cols)
            fail(source_name, line_no,
                 "expected " + std::to_string(cols) + " values, found " + std::to_string(values.size()));
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = values[static_cast<std::size_t>(c)];
    }
    if (next_content_line(in, line, line_no))
        fail(source_name, line_no, "trailing data after " + std::to_string(rows) + " rows");
    return m;
}

void write_text_matrix(std::ostream& out, const Matrix& m)
{
    out << m.rows() << ' ' << m.cols() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0)
                out << ' ';
            out << m(r, c);
        }
        out << '\n';
    }
}

Matrix read_binary_matrix(std::istream& in, const std::string& source_name)
{
    std::uint64_t dims[2] = {0, 0};
    if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims)))
        fail(source_name, 0, "truncated binary header");
    const std::uint64_t rows = to_little(dims[0]);
    const std::uint64_t cols = to_little(dims[1]);
    if (rows > (1ull << 31) || cols > (1ull << 31))
        fail(source_name, 0, "implausible binary dimensions");

    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const std::size_t count = static_cast<std::size_t>(rows * cols);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits)))
            fail(source_name, 0,
                 "binary payload holds " + std::to_string(i) + " values, header promises " + std::to_string(count));
        m.data()[i] = std::bit_cast<double>(to_little(bits));
    }
    char extra = 0;
    if (in.read(&extra, 1))
        fail(source_name, 0, "binary payload longer than header dimensions");
    return m;
}

void write_binary_matrix(std::ostream& out, const Matrix& m)
{
    const std::uint64_t dims[2] = {to_little(static_cast<std::uint64_t>(m.rows())),
                                   to_little(static_cast<std::uint64_t>(m.cols()))};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const std::size_t count = static_cast<std::size_t>(m.size());
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(m.data()[i]));
        out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
}

Matrix read_matrix(const std::filesystem::path& path)
{
    const bool binary = path.extension() == ".bin";
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in)
        throw InputError(path.string() + ": cannot open file");
    return binary ? read_binary_matrix(in, path.string()) : read_text_matrix(in, path.string());
}

void write_matrix(const std::filesystem::path& path, const Matrix& m)
{
    const bool binary = path.extension() == ".bin";
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out)
        throw InputError(path.string() + ": cannot open file for writing");
    if (binary)
        write_binary_matrix(out, m);
    else
        write_text_matrix(out, m);
}

std::vector<long> read_integer_list(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError(path.string() + ": cannot open file");
    std::vector<long> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        std::istringstream fields(line);
        std::string token;
        while (fields >> token) {
            long v = 0;
            auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc() || ptr != token.data() + token.size())
                fail(path.string(), line_no, "cannot parse integer '" + token + "'");
            values.push_back(v);
        }
    }
    return values;
}

void write_integer_list(const std::filesystem::path& path, const std::vector<long>& values)
{
    std::ofstream out(path);
    if (!out)
        throw InputError(path.string() + ": cannot open file for writing");
    for (long v : values)
        out << v << '\n';
}

}  // namespace cdskit::io
