// Writes the synthetic sensor fixtures as CSV tables.

#include <fstream>
#include <iostream>
#include <string>

#include "spectra/csv.hpp"
#include "spectra/fixtures.hpp"

namespace {

void write_sensor(const spectra::Sensor& s, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw spectra::Error(spectra::ErrorKind::Io, "cannot write '" + path + "'");
  f << "wavelength,r,g,b\n";
  for (std::size_t i = 0; i < s.grid().size(); ++i) {
    f << spectra::format_double(s.grid()[i]);
    for (std::size_t k = 0; k < s.dims(); ++k) f << ',' << spectra::format_double(s.channel(k)[i]);
    f << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "data";
  try {
    write_sensor(spectra::fixtures::d90_style_sensor(), dir + "/d90.csv");
    write_sensor(spectra::fixtures::strictly_convex_sensor(), dir + "/ellipse.csv");
  } catch (const spectra::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
