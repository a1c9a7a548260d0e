#ifndef GRAPHCF_PIPELINE_HPP
#define GRAPHCF_PIPELINE_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "graphcf/config.hpp"
#include "graphcf/feedback.hpp"
#include "graphcf/params.hpp"

namespace graphcf {

// Subcommand entry points. Each reads and writes under the cfg "out.dir"
// layout (dataset/, tables/, model/, eval/, analyze/), reports progress to
// `out`, and throws graphcf::Error on any failure.
void run_prepare(const ExperimentConfig& cfg, std::ostream& out);
void run_sample(const ExperimentConfig& cfg, std::ostream& out);
void run_train(const ExperimentConfig& cfg, std::ostream& out);
void run_evaluate(const ExperimentConfig& cfg, std::ostream& out);
void run_analyze(const ExperimentConfig& cfg, std::ostream& out);
void run_gradcheck(const ExperimentConfig& cfg, std::ostream& out);

void run_command(const std::string& command, const ExperimentConfig& cfg,
                 std::ostream& out);

const char* command_list();

// A trained snapshot plus whatever feedback tables it needs, loaded back from
// an experiment directory and ready to score (user, item) pairs.
class Predictor {
 public:
  static Predictor open(const std::string& out_dir);

  double predict(Id user, Id item) const;
  Id n_users() const { return params_.n_users; }
  Id n_items() const { return params_.n_items; }
  ModelKind kind() const { return params_.spec.kind; }

 private:
  Predictor() = default;

  ModelParams params_;
  std::optional<FeedbackTable> user1_, item1_, user2_, item2_;
  std::optional<std::vector<Id>> user_degrees_, item_degrees_;
};

}  // namespace graphcf

#endif
