#pragma once

#include <cmath>
#include <vector>

namespace metasim {

/// Error-free accumulator for doubles (Shewchuk's partials). The running
/// total is held as non-overlapping partials and `value()` returns the
/// correctly rounded sum, so identities such as
/// born = exited + live hold bit-for-bit after rounding when exact.
class ExactSum {
public:
    ExactSum() = default;

    void add(double x)
    {
        std::size_t used = 0;
        for (double y : partials_) {
            if (std::fabs(x) < std::fabs(y)) {
                std::swap(x, y);
            }
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) {
                partials_[used++] = lo;
            }
            x = hi;
        }
        partials_.resize(used);
        partials_.push_back(x);
    }

    void add(const ExactSum& other)
    {
        for (double p : other.partials_) {
            add(p);
        }
    }

    void subtract(const ExactSum& other)
    {
        for (double p : other.partials_) {
            add(-p);
        }
    }

    ExactSum& operator+=(double x)
    {
        add(x);
        return *this;
    }

    [[nodiscard]] double value() const
    {
        std::size_t n = partials_.size();
        if (n == 0) {
            return 0.0;
        }
        double hi = partials_[--n];
        double lo = 0.0;
        while (n > 0) {
            const double x = hi;
            const double y = partials_[--n];
            hi = x + y;
            lo = y - (hi - x);
            if (lo != 0.0) {
                break;
            }
        }
        // round-half-even correction when the remaining partials push the
        // tail past a tie
        if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
            const double y = lo * 2.0;
            const double x = hi + y;
            if (y == x - hi) {
                hi = x;
            }
        }
        return hi;
    }

private:
    std::vector<double> partials_;
};

} // namespace metasim
