#include "pslab/array.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pslab/errors.hpp"

namespace pslab::diff {

Array::Array(int height, int width, int channels, double fill) {
    if (height <= 0 || width <= 0 || channels <= 0)
        throw ValidationError("Array: non-positive dimension " + std::to_string(height) + "x" +
                              std::to_string(width) + "x" + std::to_string(channels));
    if (!std::isfinite(fill)) throw ValidationError("Array: non-finite fill value");
    h_ = height;
    w_ = width;
    c_ = channels;
    data_.assign(static_cast<std::size_t>(h_) * w_ * c_, fill);
}

Array Array::from_data(int height, int width, int channels, std::vector<double> data) {
    Array a;
    if (height <= 0 || width <= 0 || channels <= 0)
        throw ValidationError("Array: non-positive dimension");
    if (data.size() != static_cast<std::size_t>(height) * width * channels)
        throw ValidationError("Array: data size " + std::to_string(data.size()) +
                              " does not match shape " + std::to_string(height) + "x" +
                              std::to_string(width) + "x" + std::to_string(channels));
    a.h_ = height;
    a.w_ = width;
    a.c_ = channels;
    a.data_ = std::move(data);
    a.check_finite("Array::from_data");
    return a;
}

std::string Array::shape_str() const {
    return std::to_string(h_) + "x" + std::to_string(w_) + "x" + std::to_string(c_);
}

double Array::min_value() const {
    return *std::min_element(data_.begin(), data_.end());
}

double Array::max_value() const {
    return *std::max_element(data_.begin(), data_.end());
}

void Array::check_finite(const std::string& context) const {
    for (double v : data_) {
        if (!std::isfinite(v))
            throw NonFiniteError(context + ": non-finite element in " + shape_str() + " array");
    }
}

Array hflip(const Array& a) {
    Array out(a.height(), a.width(), a.channels());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            for (int c = 0; c < a.channels(); ++c)
                out.at(y, x, c) = a.at(y, a.width() - 1 - x, c);
    return out;
}

Array crop(const Array& a, int y0, int x0, int height, int width) {
    if (y0 < 0 || x0 < 0 || height <= 0 || width <= 0 || y0 + height > a.height() ||
        x0 + width > a.width())
        throw ValidationError("crop: window " + std::to_string(x0) + "," + std::to_string(y0) +
                              " " + std::to_string(width) + "x" + std::to_string(height) +
                              " outside " + a.shape_str());
    Array out(height, width, a.channels());
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < a.channels(); ++c)
                out.at(y, x, c) = a.at(y0 + y, x0 + x, c);
    return out;
}

bool bitwise_equal(const Array& a, const Array& b) {
    if (!a.same_shape(b)) return false;
    if (a.size() == 0) return true;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace pslab::diff
