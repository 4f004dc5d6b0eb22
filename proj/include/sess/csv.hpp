// Minimal CSV emission with stable numeric formatting (%.12g), so repeated
// runs with the same seed produce byte-identical files.
#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace sess {

inline std::string csv_num(double v) {
    char buf[40];
    snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write '" + path + "'");
        out_ << header << '\n';
    }

    /// Writes one raw line (caller joins the cells).
    void line(const std::string& s) { out_ << s << '\n'; }

private:
    std::ofstream out_;
};

} // namespace sess
