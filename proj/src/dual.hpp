#pragma once

#include <cmath>

namespace morsedisk::detail {

// Forward-mode dual number a + b*eps with eps^2 = 0. Nesting Dual<Dual<double>>
// yields second derivatives.
template <class T>
struct Dual
{
    T v{};
    T d{};

    Dual() = default;
    Dual(double x) : v(x), d(0.0) {}
    Dual(T value, T deriv) : v(value), d(deriv) {}
};

inline double primal(double x) { return x; }

template <class T>
double primal(const Dual<T>& x)
{
    return primal(x.v);
}

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b)
{
    return Dual<T>(a.v + b.v, a.d + b.d);
}

template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b)
{
    return Dual<T>(a.v - b.v, a.d - b.d);
}

template <class T>
Dual<T> operator-(const Dual<T>& a)
{
    return Dual<T>(-a.v, -a.d);
}

template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b)
{
    return Dual<T>(a.v * b.v, a.d * b.v + a.v * b.d);
}

template <class T>
Dual<T> operator*(double s, const Dual<T>& a)
{
    return Dual<T>(s * a.v, s * a.d);
}

template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b)
{
    T inv = T(1.0) / b.v;
    return Dual<T>(a.v * inv, (a.d * b.v - a.v * b.d) * inv * inv);
}

template <class T>
Dual<T> sin(const Dual<T>& a)
{
    using std::cos;
    using std::sin;
    return Dual<T>(sin(a.v), cos(a.v) * a.d);
}

template <class T>
Dual<T> cos(const Dual<T>& a)
{
    using std::cos;
    using std::sin;
    return Dual<T>(cos(a.v), -(sin(a.v) * a.d));
}

template <class T>
Dual<T> exp(const Dual<T>& a)
{
    using std::exp;
    T e = exp(a.v);
    return Dual<T>(e, e * a.d);
}

template <class T>
Dual<T> operator/(double s, const Dual<T>& b)
{
    return Dual<T>(s) / b;
}

} // namespace morsedisk::detail
