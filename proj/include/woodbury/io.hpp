#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "woodbury/decomp.hpp"
#include "woodbury/errors.hpp"
#include "woodbury/matrix.hpp"
#include "woodbury/update.hpp"

namespace woodbury {

using json = nlohmann::ordered_json;

// On-disk matrix: {"rows": R, "cols": C, "name": optional, "data": [[re, im], ...]}
// with data in row-major order; see docs/matrix-format.md. A .csv file is
// accepted as a real-only convenience form, one matrix row per line.
template <typename R = double>
struct NamedMatrix {
    Matrix<R> matrix;
    std::string name;
};

// %.17g: enough significant digits that every double survives a
// text round trip.
template <typename R>
std::string format_real(R v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(v));
    return buf;
}

template <typename R>
json matrix_to_json(const Matrix<R>& m, const std::string& name = "") {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    if (!name.empty()) j["name"] = name;
    json data = json::array();
    for (const auto& z : m.data()) data.push_back({z.real(), z.imag()});
    j["data"] = std::move(data);
    return j;
}

template <typename R = double>
NamedMatrix<R> matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw io_error("matrix file: expected an object with rows, cols and data");
    auto read_dim = [&j](const char* key) -> std::size_t {
        const auto& v = j[key];
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > 0) return v.get<std::size_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() > 0)
            return static_cast<std::size_t>(v.get<std::int64_t>());
        throw io_error("matrix file: rows and cols must be positive integers");
    };
    const std::size_t rows = read_dim("rows");
    const std::size_t cols = read_dim("cols");
    const auto& data = j["data"];
    if (!data.is_array() || data.size() != rows * cols)
        throw io_error("matrix file: data length must equal rows*cols");
    Matrix<R> m(rows, cols);
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto& pair = data[k];
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
            throw io_error("matrix file: each entry must be a [re, im] number pair");
        m.data()[k] = {pair[0].get<R>(), pair[1].get<R>()};
    }
    if (!m.is_finite()) throw io_error("matrix file: entries must be finite");
    std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "";
    return {std::move(m), std::move(name)};
}

template <typename R = double>
NamedMatrix<R> matrix_from_csv(std::istream& in, const std::string& name) {
    std::vector<std::vector<R>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::vector<R> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(static_cast<R>(v));
            } catch (const std::exception&) {
                throw io_error("csv matrix: cell is not a real number: '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw io_error("csv matrix: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty()) throw io_error("csv matrix: no data");
    Matrix<R> m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
    if (!m.is_finite()) throw io_error("csv matrix: entries must be finite");
    return {std::move(m), name};
}

template <typename R = double>
NamedMatrix<R> load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open matrix file: " + path.string());
    if (path.extension() == ".csv") return matrix_from_csv<R>(in, path.stem().string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw io_error("matrix file " + path.string() + ": " + e.what());
    }
    auto nm = matrix_from_json<R>(j);
    if (nm.name.empty()) nm.name = path.stem().string();
    return nm;
}

template <typename R>
void save_matrix(const std::filesystem::path& path, const Matrix<R>& m,
                 const std::string& name = "") {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write matrix file: " + path.string());
    out << matrix_to_json(m, name).dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path.string());
}

// FNV-1a over dims and the 17-digit rendering of every entry.
template <typename R>
std::string matrix_checksum(const Matrix<R>& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    feed(std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ":");
    for (const auto& z : m.data())
        feed(format_real(z.real()) + "," + format_real(z.imag()) + ";");
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

template <typename R>
json input_digest(const NamedMatrix<R>& nm) {
    json j;
    j["name"] = nm.name;
    j["rows"] = nm.matrix.rows();
    j["cols"] = nm.matrix.cols();
    j["checksum"] = matrix_checksum(nm.matrix);
    return j;
}

// Residual magnitudes are reported as decimal strings so that a report
// parses back to the exact values it was written from.
template <typename R>
json condition_report_to_json(const ConditionReport<R>& rep) {
    json j;
    j["range_x"] = {{"ok", rep.range_x_ok}, {"residual", format_real(rep.range_x_residual)}};
    j["range_y"] = {{"ok", rep.range_y_ok}, {"residual", format_real(rep.range_y_residual)}};
    j["smw_core"] = {{"invertible", rep.smw_core_invertible},
                     {"condition_number", format_real(rep.smw_core_condition)}};
    j["inner_regular"] = {{"ok", rep.inner_regular}, {"residual", format_real(rep.inner_residual)}};
    j["special_pair"] = {{"ok", rep.special_pair},
                         {"residual_x", format_real(rep.special_x_residual)},
                         {"residual_y", format_real(rep.special_y_residual)}};
    return j;
}

template <typename R>
json penrose_to_json(const PenroseResiduals<R>& p) {
    return json::array({format_real(p.aba), format_real(p.bab), format_real(p.ab_herm),
                        format_real(p.ba_herm)});
}

} // namespace woodbury
