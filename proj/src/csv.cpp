#include "sarvb/csv.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <system_error>

namespace sarvb {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view context) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    std::string_view body = text;
    if (!body.empty() && body.front() == '+') body.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(body.data(), body.data() + body.size(), v);
    if (body.empty() || res.ec != std::errc() || res.ptr != body.data() + body.size()) {
        std::ostringstream msg;
        msg << context << ": cannot parse '" << text << "' as a number";
        throw DataError(msg.str());
    }
    return v;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string() + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write to " + path.string() + " failed");
}

namespace {

struct Line {
    std::size_t number;  // 1-based
    std::vector<std::string> cells;
};

std::vector<Line> split_lines(const std::string& text) {
    std::vector<Line> lines;
    std::size_t pos = 0;
    std::size_t number = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view row(text.data() + pos, end - pos);
        ++number;
        if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
        if (!row.empty()) {
            Line line{number, {}};
            std::size_t start = 0;
            for (;;) {
                const std::size_t comma = row.find(',', start);
                line.cells.emplace_back(row.substr(start, comma == std::string_view::npos ? row.npos : comma - start));
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
            lines.push_back(std::move(line));
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
    return lines;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

Matrix parse_numeric_rows(const std::filesystem::path& path, const std::vector<Line>& lines, std::size_t first) {
    if (lines.size() <= first) throw DataError(path.string() + ": no data rows");
    const std::size_t cols = lines[first].cells.size();
    Matrix m(static_cast<Index>(lines.size() - first), static_cast<Index>(cols));
    for (std::size_t r = first; r < lines.size(); ++r) {
        const Line& line = lines[r];
        if (line.cells.size() != cols) {
            std::ostringstream msg;
            msg << where(path, line.number) << ": expected " << cols << " fields, found " << line.cells.size();
            throw DataError(msg.str());
        }
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Index>(r - first), static_cast<Index>(c)) =
                parse_double(line.cells[c], where(path, line.number) + " column " + std::to_string(c + 1));
    }
    return m;
}

void append_row(std::string& out, const auto& row) {
    for (Index c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += format_double(row[c]);
    }
    out += '\n';
}

void check_label(const std::string& label) {
    if (label.empty() || label.find_first_of(",\"\r\n") != std::string::npos)
        throw DataError("label '" + label + "' is empty or contains a comma, quote or newline");
}

}  // namespace

Matrix read_matrix_csv(const std::filesystem::path& path) {
    return parse_numeric_rows(path, split_lines(read_text_file(path)), 0);
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::string out;
    for (Index r = 0; r < m.rows(); ++r) append_row(out, m.row(r));
    write_text_file(path, out);
}

Matrix read_square_matrix_csv(const std::filesystem::path& path) {
    Matrix m = read_matrix_csv(path);
    if (m.rows() != m.cols()) {
        std::ostringstream msg;
        msg << path.string() << ": expected a square matrix, found " << m.rows() << "x" << m.cols();
        throw DimensionError(msg.str());
    }
    return m;
}

Matrix read_factor_csv(const std::filesystem::path& path) {
    const std::vector<Line> lines = split_lines(read_text_file(path));
    if (lines.empty()) throw DataError(path.string() + ": empty file");
    const auto& header = lines.front().cells;
    for (std::size_t q = 0; q < header.size(); ++q)
        if (header[q] != "f" + std::to_string(q + 1))
            throw DataError(where(path, lines.front().number) + ": factor header must be f1..fl, found '" +
                            header[q] + "'");
    return parse_numeric_rows(path, lines, 1);
}

void write_factor_csv(const std::filesystem::path& path, const Matrix& f) {
    std::string out;
    for (Index q = 0; q < f.cols(); ++q) out += (q ? ",f" : "f") + std::to_string(q + 1);
    out += '\n';
    for (Index r = 0; r < f.rows(); ++r) append_row(out, f.row(r));
    write_text_file(path, out);
}

PanelTable read_panel_csv(const std::filesystem::path& path) {
    const std::vector<Line> lines = split_lines(read_text_file(path));
    if (lines.empty()) throw DataError(path.string() + ": empty file");
    const auto& header = lines.front().cells;
    if (header.size() < 4 || header[0] != "unit" || header[1] != "time" || header[2] != "y")
        throw DataError(where(path, lines.front().number) +
                        ": panel header must start with unit,time,y and name at least one regressor");

    PanelTable table;
    table.regressor_names.assign(header.begin() + 3, header.end());
    const std::size_t k = table.regressor_names.size();

    std::map<std::string, Index> unit_index;
    std::map<std::string, Index> time_index;
    std::vector<std::string> units;
    std::vector<std::string> times;
    struct Cell {
        Index unit, time;
        std::size_t line;
    };
    std::vector<Cell> cells;
    cells.reserve(lines.size());
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const Line& line = lines[r];
        if (line.cells.size() != header.size()) {
            std::ostringstream msg;
            msg << where(path, line.number) << ": expected " << header.size() << " fields, found "
                << line.cells.size();
            throw DataError(msg.str());
        }
        auto [u, u_new] = unit_index.try_emplace(line.cells[0], static_cast<Index>(units.size()));
        if (u_new) units.push_back(line.cells[0]);
        auto [t, t_new] = time_index.try_emplace(line.cells[1], static_cast<Index>(times.size()));
        if (t_new) times.push_back(line.cells[1]);
        cells.push_back({u->second, t->second, r});
    }
    const auto n = static_cast<Index>(units.size());
    const auto t = static_cast<Index>(times.size());
    if (cells.size() != static_cast<std::size_t>(n * t)) {
        std::ostringstream msg;
        msg << path.string() << ": unbalanced panel, " << cells.size() << " rows for " << n << " units x " << t
            << " periods";
        throw DataError(msg.str());
    }

    PanelDataset& p = table.panel;
    p.n_units = n;
    p.n_periods = t;
    p.k_regressors = static_cast<Index>(k);
    p.y = Matrix::Constant(t, n, std::numeric_limits<double>::quiet_NaN());
    p.x.resize(t, n * static_cast<Index>(k));
    std::vector<bool> seen(static_cast<std::size_t>(n * t), false);
    for (const Cell& c : cells) {
        const Line& line = lines[c.line];
        const auto slot = static_cast<std::size_t>(c.unit * t + c.time);
        if (seen[slot])
            throw DataError(where(path, line.number) + ": duplicate row for unit " + units[static_cast<std::size_t>(c.unit)] +
                            ", time " + times[static_cast<std::size_t>(c.time)]);
        seen[slot] = true;
        p.y(c.time, c.unit) = parse_double(line.cells[2], where(path, line.number) + " column y");
        for (std::size_t r = 0; r < k; ++r)
            p.x(c.time, c.unit * static_cast<Index>(k) + static_cast<Index>(r)) =
                parse_double(line.cells[3 + r], where(path, line.number) + " column " + header[3 + r]);
    }
    p.unit_labels = std::move(units);
    p.time_labels = std::move(times);
    return table;
}

void write_panel_csv(const std::filesystem::path& path, const PanelDataset& panel,
                     const std::vector<std::string>& regressor_names) {
    const Index k = panel.k_regressors;
    std::vector<std::string> names = regressor_names;
    if (names.empty())
        for (Index r = 0; r < k; ++r) names.push_back("x" + std::to_string(r + 1));
    if (static_cast<Index>(names.size()) != k) throw DimensionError("regressor name count differs from k");
    if (static_cast<Index>(panel.unit_labels.size()) != panel.n_units ||
        static_cast<Index>(panel.time_labels.size()) != panel.n_periods)
        throw DimensionError("panel labels do not match its dimensions");
    for (const auto& s : names) check_label(s);
    for (const auto& s : panel.unit_labels) check_label(s);
    for (const auto& s : panel.time_labels) check_label(s);

    std::string out = "unit,time,y";
    for (const auto& s : names) out += "," + s;
    out += '\n';
    for (Index i = 0; i < panel.n_units; ++i) {
        for (Index t = 0; t < panel.n_periods; ++t) {
            out += panel.unit_labels[static_cast<std::size_t>(i)];
            out += ',';
            out += panel.time_labels[static_cast<std::size_t>(t)];
            out += ',';
            out += format_double(panel.y(t, i));
            for (Index r = 0; r < k; ++r) {
                out += ',';
                out += format_double(panel.regressor(t, i, r));
            }
            out += '\n';
        }
    }
    write_text_file(path, out);
}

void write_labelled_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                        const std::vector<std::string>& labels, const Matrix& values) {
    if (static_cast<Index>(labels.size()) != values.rows() || static_cast<Index>(header.size()) != values.cols() + 1)
        throw DimensionError("labelled table: header or labels do not match the values");
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
    out += '\n';
    for (Index r = 0; r < values.rows(); ++r) {
        out += labels[static_cast<std::size_t>(r)];
        for (Index c = 0; c < values.cols(); ++c) out += "," + format_double(values(r, c));
        out += '\n';
    }
    write_text_file(path, out);
}

}  // namespace sarvb
