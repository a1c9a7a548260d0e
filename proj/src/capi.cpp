#include "graphcf.h"

#include <exception>
#include <new>
#include <optional>
#include <ostream>
#include <streambuf>
#include <string>
#include <utility>

#include "graphcf/config.hpp"
#include "graphcf/params.hpp"
#include "graphcf/pipeline.hpp"
#include "graphcf/types.hpp"

namespace {

// Forwards everything written to the stream into the C callback.
class callback_buf final : public std::streambuf {
 public:
  callback_buf(graphcf_write_fn fn, void* user) : fn_(fn), user_(user) {}

 private:
  int_type overflow(int_type ch) override {
    if (fn_ && ch != traits_type::eof()) {
      const char c = traits_type::to_char_type(ch);
      fn_(&c, 1, user_);
    }
    return ch;
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    if (fn_ && n > 0) fn_(s, static_cast<size_t>(n), user_);
    return n;
  }

  graphcf_write_fn fn_;
  void* user_;
};

graphcf_status map_status(graphcf::Status s) {
  switch (s) {
    case graphcf::Status::Ok: return GRAPHCF_OK;
    case graphcf::Status::InvalidArgument: return GRAPHCF_INVALID_ARGUMENT;
    case graphcf::Status::Parse: return GRAPHCF_PARSE_ERROR;
    case graphcf::Status::Io: return GRAPHCF_IO_ERROR;
    case graphcf::Status::Config: return GRAPHCF_CONFIG_ERROR;
    case graphcf::Status::State: return GRAPHCF_STATE_ERROR;
    case graphcf::Status::Numeric: return GRAPHCF_NUMERIC_ERROR;
    case graphcf::Status::Internal: return GRAPHCF_INTERNAL_ERROR;
  }
  return GRAPHCF_INTERNAL_ERROR;
}

// Runs `body`, routing any exception into the handle's last_error slot.
template <typename Body>
graphcf_status guarded(std::string& last_error, Body&& body) {
  try {
    last_error.clear();
    body();
    return GRAPHCF_OK;
  } catch (const graphcf::Error& e) {
    last_error = e.what();
    return map_status(e.status());
  } catch (const std::exception& e) {
    last_error = e.what();
    return GRAPHCF_INTERNAL_ERROR;
  } catch (...) {
    last_error = "unknown failure";
    return GRAPHCF_INTERNAL_ERROR;
  }
}

}  // namespace

struct graphcf_experiment {
  graphcf::ExperimentConfig cfg;
  std::string last_error;
  std::string scratch;  // backs graphcf_experiment_get
  graphcf_write_fn writer = nullptr;
  void* writer_data = nullptr;
};

struct graphcf_predictor {
  std::optional<graphcf::Predictor> impl;
  std::string last_error;
};

extern "C" {

const char* graphcf_version(void) { return "0.1.0"; }

const char* graphcf_status_name(graphcf_status status) {
  switch (status) {
    case GRAPHCF_OK: return "ok";
    case GRAPHCF_INVALID_ARGUMENT: return "invalid_argument";
    case GRAPHCF_PARSE_ERROR: return "parse_error";
    case GRAPHCF_IO_ERROR: return "io_error";
    case GRAPHCF_CONFIG_ERROR: return "config_error";
    case GRAPHCF_STATE_ERROR: return "state_error";
    case GRAPHCF_NUMERIC_ERROR: return "numeric_error";
    case GRAPHCF_INTERNAL_ERROR: return "internal_error";
  }
  return "unknown";
}

const char* graphcf_config_help(void) {
  static const std::string help = graphcf::ExperimentConfig::help();
  return help.c_str();
}

const char* graphcf_command_list(void) { return graphcf::command_list(); }

graphcf_experiment* graphcf_experiment_new(void) {
  return new (std::nothrow) graphcf_experiment;
}

void graphcf_experiment_free(graphcf_experiment* exp) { delete exp; }

void graphcf_experiment_set_writer(graphcf_experiment* exp,
                                   graphcf_write_fn fn, void* user_data) {
  if (!exp) return;
  exp->writer = fn;
  exp->writer_data = user_data;
}

graphcf_status graphcf_experiment_load_file(graphcf_experiment* exp,
                                            const char* path) {
  if (!exp) return GRAPHCF_INVALID_ARGUMENT;
  return guarded(exp->last_error, [&] {
    if (!path)
      throw graphcf::Error(graphcf::Status::InvalidArgument, "path is null");
    exp->cfg.load_file(path);
  });
}

graphcf_status graphcf_experiment_set(graphcf_experiment* exp, const char* key,
                                      const char* value) {
  if (!exp) return GRAPHCF_INVALID_ARGUMENT;
  return guarded(exp->last_error, [&] {
    if (!key || !value)
      throw graphcf::Error(graphcf::Status::InvalidArgument,
                           "key and value must be non-null");
    exp->cfg.set(key, value);
  });
}

const char* graphcf_experiment_get(graphcf_experiment* exp, const char* key) {
  if (!exp || !key || !exp->cfg.known(key)) return nullptr;
  exp->scratch = exp->cfg.get(key);
  return exp->scratch.c_str();
}

graphcf_status graphcf_experiment_run(graphcf_experiment* exp,
                                      const char* command) {
  if (!exp) return GRAPHCF_INVALID_ARGUMENT;
  return guarded(exp->last_error, [&] {
    if (!command)
      throw graphcf::Error(graphcf::Status::InvalidArgument,
                           "command is null");
    callback_buf buf(exp->writer, exp->writer_data);
    std::ostream out(&buf);
    graphcf::run_command(command, exp->cfg, out);
  });
}

const char* graphcf_experiment_last_error(const graphcf_experiment* exp) {
  return exp ? exp->last_error.c_str() : "null experiment handle";
}

graphcf_status graphcf_predictor_open(const char* out_dir,
                                      graphcf_predictor** out) {
  if (!out) return GRAPHCF_INVALID_ARGUMENT;
  auto* pred = new (std::nothrow) graphcf_predictor;
  *out = pred;
  if (!pred) return GRAPHCF_INTERNAL_ERROR;
  return guarded(pred->last_error, [&] {
    if (!out_dir)
      throw graphcf::Error(graphcf::Status::InvalidArgument,
                           "out_dir is null");
    pred->impl = graphcf::Predictor::open(out_dir);
  });
}

void graphcf_predictor_free(graphcf_predictor* pred) { delete pred; }

graphcf_status graphcf_predictor_predict(graphcf_predictor* pred, int32_t user,
                                         int32_t item, double* out_score) {
  if (!pred) return GRAPHCF_INVALID_ARGUMENT;
  return guarded(pred->last_error, [&] {
    if (!pred->impl)
      throw graphcf::Error(graphcf::Status::State, "predictor did not open");
    if (!out_score)
      throw graphcf::Error(graphcf::Status::InvalidArgument,
                           "out_score is null");
    *out_score = pred->impl->predict(user, item);
  });
}

int32_t graphcf_predictor_users(const graphcf_predictor* pred) {
  return pred && pred->impl ? pred->impl->n_users() : 0;
}

int32_t graphcf_predictor_items(const graphcf_predictor* pred) {
  return pred && pred->impl ? pred->impl->n_items() : 0;
}

const char* graphcf_predictor_model(const graphcf_predictor* pred) {
  return pred && pred->impl ? graphcf::model_kind_name(pred->impl->kind()) : "";
}

const char* graphcf_predictor_last_error(const graphcf_predictor* pred) {
  return pred ? pred->last_error.c_str() : "null predictor handle";
}

}  // extern "C"
