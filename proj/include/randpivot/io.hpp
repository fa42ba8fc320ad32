#pragma once

#include <charconv>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "driver.hpp"
#include "matrix.hpp"

namespace randpivot::io {

/// 17 significant digits: enough to reproduce any double bit-exactly.
inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Shortest decimal that round-trips to the same double.
inline std::string format_shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::runtime_error parse_error(const std::string& path, std::size_t line,
                                      const std::string& what) {
    return std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline bool next_content_line(std::istream& in, std::string& line, std::size_t& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t start = line.find_first_not_of(" \t\r");
        if (start == std::string::npos) continue;
        if (line[start] == '%') continue;
        return true;
    }
    return false;
}

inline double parse_double(const std::string& tok, const std::string& path, std::size_t line) {
    // strtod instead of stod: subnormal values parse fine (ERANGE with a
    // correctly rounded result) instead of throwing.
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || tok.empty())
        throw parse_error(path, line, "bad numeric value '" + tok + "'");
    if (!std::isfinite(v)) throw parse_error(path, line, "non-finite value");
    return v;
}

}  // namespace detail

struct MmMatrix {
    Matrix values;
    bool symmetric = false;  // file declared "symmetric"
};

/// Reads "array real general" and "coordinate real general/symmetric"
/// MatrixMarket files. Symmetric coordinate files must give only the lower
/// triangle (row >= column) and are expanded to the full matrix. Indices are
/// 1-based in the file, 0-based in memory.
inline MmMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw detail::parse_error(path, 1, "empty file");
    ++lineno;

    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket" || object != "matrix")
        throw detail::parse_error(path, 1, "not a MatrixMarket matrix file");
    if (field != "real")
        throw detail::parse_error(path, 1, "unsupported field '" + field + "' (only real)");
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general")
        throw detail::parse_error(path, 1, "unsupported symmetry '" + symmetry + "'");

    if (format == "array") {
        if (symmetric)
            throw detail::parse_error(path, 1, "array symmetric files are not supported");
        if (!detail::next_content_line(in, line, lineno))
            throw detail::parse_error(path, lineno, "missing size line");
        std::istringstream sz(line);
        long long rows = 0, cols = 0;
        if (!(sz >> rows >> cols) || rows < 1 || cols < 1)
            throw detail::parse_error(path, lineno, "bad size line");
        Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
        for (std::size_t c = 0; c < m.cols(); ++c)
            for (std::size_t r = 0; r < m.rows(); ++r) {
                if (!detail::next_content_line(in, line, lineno))
                    throw detail::parse_error(path, lineno, "missing entries");
                std::istringstream es(line);
                std::string tok;
                es >> tok;
                m(r, c) = detail::parse_double(tok, path, lineno);
            }
        return {std::move(m), false};
    }

    if (format != "coordinate")
        throw detail::parse_error(path, 1, "unsupported format '" + format + "'");
    if (!detail::next_content_line(in, line, lineno))
        throw detail::parse_error(path, lineno, "missing size line");
    std::istringstream sz(line);
    long long rows = 0, cols = 0, nnz = 0;
    if (!(sz >> rows >> cols >> nnz) || rows < 1 || cols < 1 || nnz < 0)
        throw detail::parse_error(path, lineno, "bad size line");
    if (symmetric && rows != cols)
        throw detail::parse_error(path, lineno, "symmetric matrix must be square");
    Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    std::vector<bool> seen(m.rows() * m.cols(), false);
    for (long long e = 0; e < nnz; ++e) {
        if (!detail::next_content_line(in, line, lineno))
            throw detail::parse_error(path, lineno, "missing entries");
        std::istringstream es(line);
        long long i = 0, j = 0;
        std::string tok;
        if (!(es >> i >> j >> tok)) throw detail::parse_error(path, lineno, "bad entry line");
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw detail::parse_error(path, lineno, "index out of bounds");
        const double v = detail::parse_double(tok, path, lineno);
        const std::size_t r = static_cast<std::size_t>(i - 1);
        const std::size_t c = static_cast<std::size_t>(j - 1);
        if (symmetric && r < c)
            throw detail::parse_error(path, lineno,
                                      "asymmetric data under symmetric header (row < column)");
        if (seen[c * m.rows() + r]) throw detail::parse_error(path, lineno, "duplicate entry");
        seen[c * m.rows() + r] = true;
        m(r, c) = v;
        if (symmetric && r != c) {
            if (seen[r * m.rows() + c]) throw detail::parse_error(path, lineno, "duplicate entry");
            seen[r * m.rows() + c] = true;
            m(c, r) = v;
        }
    }
    return {std::move(m), symmetric};
}

/// Writes a dense "array real general" file with 17 significant digits, so a
/// write/read round trip is bit-identical.
inline void write_matrix_market(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "%%MatrixMarket matrix array real general\n";
    out << m.rows() << " " << m.cols() << "\n";
    for (std::size_t c = 0; c < m.cols(); ++c)
        for (std::size_t r = 0; r < m.rows(); ++r) out << format_full(m(r, c)) << "\n";
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

/// Stable trace schema: "t,pivot,gamma,off_hat,kappa_hat,residual".
/// Cadenced fields are left empty on records that were not sampled.
inline void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "t,pivot,gamma,off_hat,kappa_hat,residual\n";
    for (const TraceRecord& rec : trace) {
        out << rec.iter << ",";
        if (rec.pivot) out << rec.pivot->to_string();
        out << ",";
        if (rec.sampled)
            out << format_shortest(rec.gamma) << "," << format_shortest(rec.off_hat) << ","
                << format_shortest(rec.kappa_hat) << ","
                << format_shortest(rec.reconstruction_residual);
        else
            out << ",,,";
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace randpivot::io
