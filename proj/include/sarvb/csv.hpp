#pragma once

#include "sarvb/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sarvb {

/// Shortest text that is not ambiguous: 17 significant digits, '.' decimal
/// point, no locale. Parsing the result returns the same double.
std::string format_double(double v);

/// Full-string parse; `context` names the field in the DataError.
double parse_double(std::string_view text, std::string_view context);

/// Headerless, comma separated, one matrix row per line.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

/// read_matrix_csv plus a square-shape check.
Matrix read_square_matrix_csv(const std::filesystem::path& path);

/// T x l factor paths with the header f1,...,fl.
Matrix read_factor_csv(const std::filesystem::path& path);
void write_factor_csv(const std::filesystem::path& path, const Matrix& f);

/// Long-format panel: header unit,time,y,<regressor names>. Units and
/// periods keep their order of first appearance and the panel must be
/// balanced. Names default to x1..xk on writing.
struct PanelTable {
    PanelDataset panel;
    std::vector<std::string> regressor_names;
};

PanelTable read_panel_csv(const std::filesystem::path& path);
void write_panel_csv(const std::filesystem::path& path, const PanelDataset& panel,
                     const std::vector<std::string>& regressor_names = {});

/// Labelled table: a header row, then rows whose first cell is a label.
void write_labelled_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                        const std::vector<std::string>& labels, const Matrix& values);

/// Whole file as a string; DataError if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace sarvb
