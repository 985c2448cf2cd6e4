#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "sndropt/dist.hpp"

inline std::string data_path(const std::string& name) { return std::string(SNDROPT_TEST_DATA) + "/" + name; }

inline sndropt::LoadedPdf load_fixture(const std::string& name, bool renormalize = false) {
  std::ifstream in(data_path(name));
  if (!in) throw std::runtime_error("missing fixture " + name);
  return sndropt::load_tabulated_pdf(in, renormalize);
}
