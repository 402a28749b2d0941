#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace sgl {

// Shortest round-trippable decimal form ("%.17g"); inf/nan spelled out.
std::string fmt_double(double v);

// Minimal CSV sink: fixed column header, numeric rows, '\n' line endings.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::initializer_list<std::string> columns);
    CsvWriter(const std::string& path, const std::vector<std::string>& columns);

    void row(std::initializer_list<double> values);
    void row(const std::vector<double>& values);
    void raw_row(const std::vector<std::string>& cells);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t ncols_;
};

}  // namespace sgl
