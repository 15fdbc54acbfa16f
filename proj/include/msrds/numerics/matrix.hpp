#ifndef MSRDS_NUMERICS_MATRIX_HPP
#define MSRDS_NUMERICS_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace msrds::numerics {

using Vector = std::vector<double>;

// Dense real matrix, row-major. Dimensions are fixed at construction and
// always at least 1x1.
class Matrix {
  public:
    Matrix() : rows_(1), cols_(1), data_(1, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);
    // Row-wise construction: Matrix{{1,2},{3,4}}.
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Matrix transposed() const;
    double trace() const;
    double frobenius_norm() const;
    double max_abs() const;
    bool all_finite() const;

    Matrix& operator+=(const Matrix& rhs);
    Matrix& operator-=(const Matrix& rhs);
    Matrix& operator*=(double s);

    friend Matrix operator+(Matrix lhs, const Matrix& rhs) { return lhs += rhs; }
    friend Matrix operator-(Matrix lhs, const Matrix& rhs) { return lhs -= rhs; }
    friend Matrix operator*(Matrix lhs, double s) { return lhs *= s; }
    friend Matrix operator*(double s, Matrix rhs) { return rhs *= s; }
    friend Matrix operator*(const Matrix& lhs, const Matrix& rhs);
    friend Vector operator*(const Matrix& lhs, const Vector& v);

  private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

// m * m^T for a column vector m.
Matrix outer(const Vector& m);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);

}  // namespace msrds::numerics

#endif
