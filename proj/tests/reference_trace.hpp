#pragma once

// Reference trace of one stochastic interval with escape time 26:
// outer enclosure of omega_n and a lower bound on |omega_n|, each printed to
// five significant digits.

#include <array>
#include <cmath>

namespace reftrace {

struct Row {
  int n;
  double lo, hi, width;
};

inline constexpr std::array<Row, 27> kRows = {{
    {0, 1.9607, 1.9608, 0.0000068187},      {1, -1.8839, -1.8838, 0.000019921},
    {2, -1.5882, -1.5880, 0.000068238},     {3, -0.56150, -0.56128, 0.00020992},
    {4, 1.6455, 1.6458, 0.00022887},        {5, -0.74766, -0.74689, 0.00076011},
    {6, 1.4017, 1.4030, 0.0011428},         {7, -0.0073968, -0.0041981, 0.0031985},
    {8, 1.9607, 1.9608, 0.000030267},       {9, -1.8838, -1.8836, 0.00012551},
    {10, -1.5879, -1.5873, 0.00047967},     {11, -0.56046, -0.55892, 0.0015298},
    {12, 1.6466, 1.6484, 0.0017193},        {13, -0.75638, -0.75071, 0.0056585},
    {14, 1.3886, 1.3972, 0.0085210},        {15, 0.0086113, 0.032357, 0.023745},
    {16, 1.9597, 1.9607, 0.00096598},       {17, -1.8836, -1.8797, 0.0037938},
    {18, -1.5871, -1.5727, 0.014284},       {19, -0.55781, -0.51266, 0.045141},
    {20, 1.6496, 1.6980, 0.048329},         {21, -0.92227, -0.76048, 0.16177},
    {22, 1.1101, 1.3825, 0.27222},          {23, 0.049666, 0.72824, 0.67856},
    {24, 1.4304, 1.9584, 0.52784},          {25, -1.8742, -0.085416, 1.7887},
    {26, -1.5518, 1.9535, 3.5052},
}};

// The printed enclosure of the interval.
inline constexpr const char* kBoxLo = "1.96076793815";
inline constexpr const char* kBoxHi = "1.96077475689";

// Queue item 2565 of a default run on [1.4, 2], exact at 250 bits.
inline constexpr const char* kExactLo = "0x1.f5f4e339699fef2e7ea5612fd61b25467ef76c0b1b33333333333333333333p+0";
inline constexpr const char* kExactHi = "0x1.f5f5559fa29a393da2ba94c8df339b54016bc629dp+0";

// One unit in the fifth significant digit of a printed value.
inline double unit5(double printed) { return std::pow(10.0, std::floor(std::log10(std::fabs(printed))) - 4); }

// Distance in fifth-digit units, with slack for the decimal rendering of `printed`.
inline double units_off(double value, double printed) { return std::fabs(value - printed) / unit5(printed) - 1e-9; }

}  // namespace reftrace
