#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pslab::diff {

// Dense float64 array, shape (height, width, channels), row-major with the
// channel index fastest. Two-dimensional data is channels == 1. Every element
// must be finite; constructors and the op layer enforce this.
class Array {
public:
    Array() = default;
    Array(int height, int width, int channels = 1, double fill = 0.0);
    static Array from_data(int height, int width, int channels, std::vector<double> data);

    int height() const { return h_; }
    int width() const { return w_; }
    int channels() const { return c_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int y, int x, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * w_ + x) * c_ + c];
    }
    double at(int y, int x, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * w_ + x) * c_ + c];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    bool same_shape(const Array& o) const {
        return h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
    }
    bool is_scalar() const { return size() == 1; }
    std::string shape_str() const;

    double min_value() const;
    double max_value() const;

    // Throws ValidationError naming `context` if any element is NaN or Inf.
    void check_finite(const std::string& context) const;

private:
    int h_ = 0, w_ = 0, c_ = 0;
    std::vector<double> data_;
};

Array hflip(const Array& a);
Array crop(const Array& a, int y0, int x0, int height, int width);
bool bitwise_equal(const Array& a, const Array& b);

}  // namespace pslab::diff
