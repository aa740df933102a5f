#pragma once

#include <stdexcept>
#include <vector>

namespace radblow {

// Thomas solve for a diagonally dominant tridiagonal system.
// lower[0] and upper[n-1] are ignored. Overwrites rhs with the solution.
class TridiagonalSolver {
public:
    void resize(int n) {
        scratch_c_.assign(static_cast<size_t>(n), 0.0);
    }

    void solve(const std::vector<double>& lower, const std::vector<double>& diag,
               const std::vector<double>& upper, std::vector<double>& rhs) {
        const size_t n = diag.size();
        if (scratch_c_.size() != n) scratch_c_.assign(n, 0.0);
        if (diag[0] == 0.0) throw std::runtime_error("tridiagonal solve: zero pivot");
        scratch_c_[0] = upper[0] / diag[0];
        rhs[0] = rhs[0] / diag[0];
        for (size_t i = 1; i < n; ++i) {
            const double m = diag[i] - lower[i] * scratch_c_[i - 1];
            if (m == 0.0) throw std::runtime_error("tridiagonal solve: zero pivot");
            scratch_c_[i] = upper[i] / m;
            rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
        }
        for (size_t i = n - 1; i-- > 0;)
            rhs[i] -= scratch_c_[i] * rhs[i + 1];
    }

private:
    std::vector<double> scratch_c_;
};

}  // namespace radblow
