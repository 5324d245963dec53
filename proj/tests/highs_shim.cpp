// Minimal HiGHS command-line look-alike used to exercise the subprocess
// backend: --model_file, --options_file, --solution_file, raw solution style.

#include <iostream>
#include <string>

#include <Highs.h>

int main(int argc, char** argv) {
  std::string model, options, solution;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--model_file") model = argv[i + 1];
    else if (flag == "--options_file") options = argv[i + 1];
    else if (flag == "--solution_file") solution = argv[i + 1];
    else {
      std::cerr << "unknown option " << flag << '\n';
      return 1;
    }
  }
  if (model.empty()) {
    std::cerr << "no model file\n";
    return 1;
  }
  Highs highs;
  if (!options.empty() && highs.readOptions(options) == HighsStatus::kError) return 1;
  if (highs.readModel(model) == HighsStatus::kError) return 1;
  if (highs.run() == HighsStatus::kError &&
      highs.getModelStatus() != HighsModelStatus::kInfeasible) {
    return 1;
  }
  if (!solution.empty() &&
      highs.writeSolution(solution, kSolutionStyleRaw) == HighsStatus::kError) {
    return 1;
  }
  return 0;
}
