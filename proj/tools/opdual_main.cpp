#include <CLI11.hpp>

#include <string>
#include <vector>

#include "opdual/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"operator-duality laboratory: verification batteries for "
               "projections, duality operators, defect spaces, and resistor networks"};

  opdual::JobSpec job;
  std::vector<std::string> tol_overrides;
  std::string levels_csv;

  app.add_option("--cmd", job.command,
                 "charproj|duality|spectra|dipole|defect|exhaust|verify-all")
      ->required();
  app.add_option("--in", job.input_path, "input file (network, pair, or matrix format)");
  app.add_option("--out", job.output_dir, "output directory for report.csv and data files");
  app.add_option("--seed", job.seed, "seed for the randomized suites");
  app.add_option("--tol", tol_overrides, "tolerance override, <name>=<value>; repeatable");
  app.add_option("--family", job.family, "path_n|lattice2d_n|binary_tree:<depth>:<ratio>");
  app.add_option("--levels", levels_csv, "comma-separated level list, e.g. 4,6,8");

  CLI11_PARSE(app, argc, argv);

  for (const std::string& ov : tol_overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      std::cerr << "ParseError: --tol expects <name>=<value>, got '" << ov << "'\n";
      return 2;
    }
    try {
      job.tolerance_overrides[ov.substr(0, eq)] = std::stod(ov.substr(eq + 1));
    } catch (const std::exception&) {
      std::cerr << "ParseError: bad tolerance value in '" << ov << "'\n";
      return 2;
    }
  }
  if (!levels_csv.empty()) {
    std::size_t pos = 0;
    while (pos < levels_csv.size()) {
      const auto comma = levels_csv.find(',', pos);
      const std::string piece = levels_csv.substr(pos, comma - pos);
      try {
        job.levels.push_back(std::stoul(piece));
      } catch (const std::exception&) {
        std::cerr << "ParseError: bad level '" << piece << "'\n";
        return 2;
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }

  return opdual::run(job);
}
