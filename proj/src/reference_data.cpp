#include "opsplit/reference_data.hpp"

#include <cmath>

namespace opsplit {
namespace {

const std::vector<double> kStationsY = {1.0,    0.9766, 0.9688, 0.9609, 0.9531, 0.8516,
                                        0.7344, 0.6172, 0.5,    0.4531, 0.2813, 0.1719,
                                        0.1016, 0.0703, 0.0625, 0.0547, 0.0};
const std::vector<double> kStationsX = {1.0,    0.9688, 0.9609, 0.9531, 0.9453, 0.9063,
                                        0.8594, 0.8047, 0.5,    0.2344, 0.2266, 0.1563,
                                        0.0938, 0.0781, 0.0703, 0.0625, 0.0};

GhiaData re100() {
  GhiaData d;
  d.reynolds = 100.0;
  d.y = kStationsY;
  d.u = {1.0,      0.84123,  0.78871,  0.73722,  0.68717,  0.23151,  0.00332,  -0.13641, -0.20581,
         -0.21090, -0.15662, -0.10150, -0.06434, -0.04775, -0.04192, -0.03717, 0.0};
  d.x = kStationsX;
  d.v = {0.0,      -0.05906, -0.07391, -0.08864, -0.10313, -0.16914, -0.22445, -0.24533, 0.05454,
         0.17527,  0.17507,  0.16077,  0.12317,  0.10890,  0.10091,  0.09233,  0.0};
  return d;
}

GhiaData re1000() {
  GhiaData d;
  d.reynolds = 1000.0;
  d.y = kStationsY;
  d.u = {1.0,      0.65928,  0.57492,  0.51117,  0.46604,  0.33304,  0.18719,  0.05702, -0.06080,
         -0.10648, -0.27805, -0.38289, -0.29730, -0.22220, -0.20196, -0.18109, 0.0};
  d.x = kStationsX;
  d.v = {0.0,     -0.21388, -0.27669, -0.33714, -0.39188, -0.51550, -0.42665, -0.31966, 0.02526,
         0.32235, 0.33075,  0.37095,  0.32627,  0.30353,  0.29012,  0.27485,  0.0};
  d.vortices = {
      {"primary", -0.117929, 0.5313, 0.5625},
      {"first-BL", 2.31129e-4, 0.0859, 0.0781},
      {"first-BR", 1.75102e-3, 0.8594, 0.1094},
      {"second-BR", -9.31929e-8, 0.9922, 0.0078},
  };
  return d;
}

GhiaData re3200() {
  GhiaData d;
  d.reynolds = 3200.0;
  d.vortices = {
      {"primary", -0.120377, 0.5165, 0.5469},   {"first-T", 7.27682e-4, 0.0547, 0.8984},
      {"first-BL", 9.7823e-4, 0.0859, 0.1094},  {"first-BR", 3.13955e-3, 0.8125, 0.0859},
      {"second-BL", -6.33001e-8, 0.0078, 0.0078}, {"second-BR", -2.51648e-7, 0.9844, 0.0078},
  };
  return d;
}

}  // namespace

std::optional<GhiaData> ghia_data(double reynolds) {
  if (std::abs(reynolds - 100.0) < 1e-9) return re100();
  if (std::abs(reynolds - 1000.0) < 1e-9) return re1000();
  if (std::abs(reynolds - 3200.0) < 1e-9) return re3200();
  return std::nullopt;
}

}  // namespace opsplit
