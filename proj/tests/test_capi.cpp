// Exercises the shared-library surface the way an embedding application
// would: only graphcf.h, no core headers. Takes the ratings csv path as
// argv[1] and a scratch directory as argv[2].
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "graphcf.h"

static int failures = 0;

#define EXPECT(cond)                                                    \
  do {                                                                  \
    if (!(cond)) {                                                      \
      std::printf("FAIL %s:%d  %s\n", __FILE__, __LINE__, #cond);       \
      ++failures;                                                       \
    }                                                                   \
  } while (0)

static void append_text(const char* text, size_t length, void* user_data) {
  static_cast<std::string*>(user_data)->append(text, length);
}

int main(int argc, char** argv) {
  if (argc < 3) {
    std::printf("usage: %s ratings.csv scratch-dir\n", argv[0]);
    return 2;
  }
  const std::string ratings = argv[1];
  const std::string scratch = argv[2];
  std::filesystem::create_directories(scratch);

  // ---- free functions ----
  EXPECT(graphcf_version() != nullptr);
  EXPECT(std::strlen(graphcf_version()) >= 5);
  EXPECT(std::string(graphcf_status_name(GRAPHCF_OK)) == "ok");
  EXPECT(std::string(graphcf_status_name(GRAPHCF_CONFIG_ERROR)) ==
         "config_error");
  EXPECT(std::string(graphcf_status_name(static_cast<graphcf_status>(99))) !=
         "");
  EXPECT(std::string(graphcf_config_help()).find("model.kind") !=
         std::string::npos);
  EXPECT(std::string(graphcf_command_list()).find("prepare") !=
         std::string::npos);
  EXPECT(std::string(graphcf_command_list()).find("gradcheck") !=
         std::string::npos);

  // ---- config on the experiment handle ----
  graphcf_experiment* exp = graphcf_experiment_new();
  EXPECT(exp != nullptr);
  EXPECT(std::string(graphcf_experiment_last_error(exp)) == "");
  EXPECT(std::string(graphcf_experiment_get(exp, "model.kind")) == "mf");
  EXPECT(graphcf_experiment_get(exp, "bogus.key") == nullptr);
  EXPECT(graphcf_experiment_set(exp, "bogus.key", "1") ==
         GRAPHCF_CONFIG_ERROR);
  EXPECT(std::string(graphcf_experiment_last_error(exp)).find("bogus.key") !=
         std::string::npos);
  EXPECT(graphcf_experiment_set(exp, "model.kind", "svdpp") == GRAPHCF_OK);
  EXPECT(std::string(graphcf_experiment_last_error(exp)) == "");
  EXPECT(std::string(graphcf_experiment_get(exp, "model.kind")) == "svdpp");
  EXPECT(graphcf_experiment_load_file(exp, "/no/such/file.cfg") ==
         GRAPHCF_IO_ERROR);

  // null-argument hygiene: nothing here may crash
  EXPECT(graphcf_experiment_set(exp, nullptr, "1") != GRAPHCF_OK);
  EXPECT(graphcf_experiment_set(nullptr, "model.kind", "mf") != GRAPHCF_OK);
  EXPECT(graphcf_experiment_get(exp, nullptr) == nullptr);
  EXPECT(graphcf_experiment_run(exp, nullptr) != GRAPHCF_OK);
  EXPECT(graphcf_experiment_run(nullptr, "prepare") != GRAPHCF_OK);
  graphcf_experiment_set_writer(exp, nullptr, nullptr);
  graphcf_experiment_free(nullptr);
  graphcf_predictor_free(nullptr);

  // ---- a real run: prepare, sample, train ----
  std::string log;
  graphcf_experiment_set_writer(exp, append_text, &log);
  EXPECT(graphcf_experiment_set(exp, "data.ratings", ratings.c_str()) ==
         GRAPHCF_OK);
  const std::string out_dir = scratch + "/exp";
  EXPECT(graphcf_experiment_set(exp, "out.dir", out_dir.c_str()) == GRAPHCF_OK);
  EXPECT(graphcf_experiment_set(exp, "model.factors", "4") == GRAPHCF_OK);
  EXPECT(graphcf_experiment_set(exp, "sample.k", "3") == GRAPHCF_OK);
  EXPECT(graphcf_experiment_set(exp, "train.epochs", "3") == GRAPHCF_OK);
  EXPECT(graphcf_experiment_set(exp, "train.batch", "16") == GRAPHCF_OK);

  EXPECT(graphcf_experiment_run(exp, "evaluate") == GRAPHCF_STATE_ERROR);
  EXPECT(std::string(graphcf_experiment_last_error(exp)).find("prepare") !=
         std::string::npos);
  EXPECT(graphcf_experiment_run(exp, "descend") == GRAPHCF_INVALID_ARGUMENT);

  EXPECT(graphcf_experiment_run(exp, "prepare") == GRAPHCF_OK);
  EXPECT(graphcf_experiment_run(exp, "sample") == GRAPHCF_OK);
  EXPECT(graphcf_experiment_run(exp, "train") == GRAPHCF_OK);
  EXPECT(graphcf_experiment_run(exp, "evaluate") == GRAPHCF_OK);
  EXPECT(log.find("prepared") != std::string::npos);
  EXPECT(log.find("epoch 3 ") != std::string::npos);
  EXPECT(log.find("test_rmse") != std::string::npos);

  // writer removal silences further commands
  const size_t logged = log.size();
  graphcf_experiment_set_writer(exp, nullptr, nullptr);
  EXPECT(graphcf_experiment_run(exp, "evaluate") == GRAPHCF_OK);
  EXPECT(log.size() == logged);

  // ---- predictor over the directory the run wrote ----
  graphcf_predictor* pred = nullptr;
  EXPECT(graphcf_predictor_open(out_dir.c_str(), &pred) == GRAPHCF_OK);
  EXPECT(pred != nullptr);
  EXPECT(std::string(graphcf_predictor_model(pred)) == "svdpp");
  const int32_t users = graphcf_predictor_users(pred);
  const int32_t items = graphcf_predictor_items(pred);
  EXPECT(users == 12);
  EXPECT(items > 0);
  double score = -1.0;
  EXPECT(graphcf_predictor_predict(pred, 0, 0, &score) == GRAPHCF_OK);
  EXPECT(score > 0.0);
  EXPECT(score < 1.0);
  double again = -1.0;
  EXPECT(graphcf_predictor_predict(pred, 0, 0, &again) == GRAPHCF_OK);
  EXPECT(again == score);
  EXPECT(graphcf_predictor_predict(pred, users + 5, 0, &score) ==
         GRAPHCF_INVALID_ARGUMENT);
  EXPECT(std::strlen(graphcf_predictor_last_error(pred)) > 0);
  EXPECT(graphcf_predictor_predict(pred, 0, 0, nullptr) != GRAPHCF_OK);
  graphcf_predictor_free(pred);

  // failure still hands back a handle carrying the error text
  graphcf_predictor* broken = reinterpret_cast<graphcf_predictor*>(1);
  EXPECT(graphcf_predictor_open((scratch + "/nothing-here").c_str(), &broken) ==
         GRAPHCF_STATE_ERROR);
  EXPECT(broken != nullptr);
  EXPECT(std::strlen(graphcf_predictor_last_error(broken)) > 0);
  double unused = 0.0;
  EXPECT(graphcf_predictor_predict(broken, 0, 0, &unused) != GRAPHCF_OK);
  graphcf_predictor_free(broken);

  graphcf_experiment_free(exp);

  if (failures == 0) {
    std::printf("test_capi: all checks passed\n");
    return 0;
  }
  std::printf("test_capi: %d failure(s)\n", failures);
  return 1;
}
