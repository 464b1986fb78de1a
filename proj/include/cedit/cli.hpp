#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cedit/editor.hpp"
#include "cedit/metrics.hpp"
#include "cedit/predictor.hpp"
#include "cedit/search.hpp"

namespace cedit::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kBackend = 2, kData = 3 };

// Maps an exception escaping a command onto the documented exit codes.
int exit_code_for(const std::exception& e);

// Local checkpoint path or remote URL ("remote" uses CEDIT_ENDPOINT).
std::unique_ptr<Predictor> open_predictor(std::string_view spec);
std::unique_ptr<Editor> open_editor(std::string_view spec);
std::unique_ptr<FluencyScorer> open_fluency(std::string_view spec);

// One row of the label-condition / masker grid.
struct AblationCondition {
  bool stage1_labels = true;  // editor trained with label-conditioned counts
  bool stage2_labels = true;  // contrast label passed when infilling
  MaskStrategy strategy = MaskStrategy::Gradient;

  std::string name() const;  // e.g. "Label/NoLabel Grad"
  std::string key() const;   // e.g. "label-nolabel-grad"
};

// The four label conditions with gradient masking, then Label/Label random.
std::vector<AblationCondition> default_ablation_conditions();
AblationCondition parse_ablation_condition(std::string_view key);

struct AblationRow {
  AblationCondition condition;
  MetricsReport report;
  Counters counters;
};

std::vector<AblationRow> run_ablation(std::span<const EditJob> inputs, const Predictor& f,
                                      const Editor& label_editor, const Editor& nolabel_editor,
                                      const FluencyScorer* scorer, const SearchOptions& base,
                                      std::span<const AblationCondition> conditions, int jobs);
std::string ablation_markdown(std::span<const AblationRow> rows);
std::string ablation_json(std::span<const AblationRow> rows);

// Entry point behind the `cedit` binary.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cedit::cli
