// Small shared types: dense row-major matrix, validation report.
#pragma once

#include <cassert>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace sess {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense row-major matrix of doubles. Used for per-(user,slot) quantities.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Mat& a, const Mat& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// Outcome of a validation or feasibility check. Violations are data, not errors.
struct Report {
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    void fail(std::string msg) { violations.push_back(std::move(msg)); }

    std::string to_string() const {
        if (ok()) return "ok";
        std::string s;
        for (const auto& v : violations) {
            s += v;
            s += '\n';
        }
        return s;
    }
};

} // namespace sess
