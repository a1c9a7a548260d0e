#include "graphcf/config.hpp"

#include <array>
#include <string_view>

#include "graphcf/types.hpp"
#include "io_util.hpp"

namespace graphcf {

namespace {

struct ConfigKey {
  const char* key;
  const char* def;
  const char* help;
};

constexpr std::array kSchema = std::to_array<ConfigKey>({
    // prepare
    {"data.ratings", "", "path of the ratings file `prepare` reads"},
    {"data.delimiter", ",", "field separator in the ratings file"},
    {"data.user_col", "0", "0-based column holding the user id"},
    {"data.item_col", "1", "0-based column holding the item id"},
    {"data.score_col", "2", "0-based column holding the raw rating"},
    {"data.rating_min", "1", "smallest raw rating on the scale"},
    {"data.rating_max", "5", "largest raw rating on the scale"},
    {"split.fraction", "0.8", "target share of records in the train split"},
    {"split.seed", "1", "seed for the train/test shuffle"},
    {"out.dir", "out", "directory all commands read and write under"},
    // sample
    {"sample.policy", "random", "feedback sampling policy: random or relevance"},
    {"sample.k", "20", "fixed width of every sampled feedback row"},
    {"sample.seed", "1", "seed for the feedback samplers"},
    {"sample.step_two", "false",
     "also sample the two-hop tables a-gcf2 trains on"},
    // relevance pretraining
    {"pretrain.factors", "16", "latent dimension of the relevance scorer"},
    {"pretrain.lr", "0.05", "learning rate of the relevance scorer"},
    {"pretrain.epochs", "10", "epochs for the relevance scorer"},
    {"pretrain.batch", "256", "batch size for the relevance scorer"},
    {"pretrain.lambda", "0.02", "L2 strength for the relevance scorer"},
    // model
    {"model.kind", "mf",
     "mf, svdpp, w-svdpp, a-svdpp, gcf, w-gcf, a-gcf or a-gcf2"},
    {"model.factors", "16", "latent dimension K (feedback factors match it)"},
    {"model.temperature", "0.1", "softmax temperature of the attention"},
    {"model.hidden", "32", "comma list of attention hidden-layer widths"},
    {"model.scale", "logistic",
     "bounding function on the raw score: logistic or clamp"},
    {"model.norm", "sampled",
     "uniform-aggregate normalizer: sampled (k^-1/2) or degree (|R|^-1/2)"},
    {"model.mask_pad", "false", "exclude pad slots from the attention softmax"},
    // train
    {"train.lr", "0.05", "SGD learning rate"},
    {"train.epochs", "30", "number of passes over the train split"},
    {"train.batch", "256", "records per SGD mini-batch"},
    {"train.lambda", "0.02", "L2 strength on embedding rows"},
    {"train.lambda_r", "0.0001", "L2 strength on the alpha/beta weight factors"},
    {"train.seed", "1", "seed for init and batch order"},
    {"train.checkpoint_every", "0",
     "save a snapshot every N epochs (0 disables)"},
    // evaluate
    {"eval.slice_edges", "1,5,10,50",
     "degree boundaries of the sparse-slice report"},
    // analyze
    {"analyze.temperatures", "",
     "comma list of softmax temperatures to sweep (empty skips)"},
    {"analyze.compare", "",
     "name=curve.csv pairs (comma separated) to merge into compare.csv"},
    {"analyze.dump_adjacency", "false",
     "also write the train adjacency lists under analyze/"},
    // gradcheck
    {"gradcheck.users", "12", "users in the synthetic gradcheck instance"},
    {"gradcheck.items", "12", "items in the synthetic gradcheck instance"},
    {"gradcheck.records", "24", "ratings in the synthetic gradcheck instance"},
    {"gradcheck.k", "5", "feedback width of the gradcheck instance"},
    {"gradcheck.eps", "1e-5", "central-difference step"},
    {"gradcheck.tolerance", "1e-4", "largest relative error accepted"},
    {"gradcheck.seed", "1", "seed for the gradcheck instance"},
});

const ConfigKey* find_key(const std::string& key) {
  for (const ConfigKey& k : kSchema)
    if (key == k.key) return &k;
  return nullptr;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw Error(Status::Config, "config key '" + key + "': expected " +
                                  expected + ", got '" + value + "'");
}

}  // namespace

void ExperimentConfig::load_file(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = detail::trim(line);
    if (v.empty() || v.front() == '#') continue;
    const std::size_t eq = v.find('=');
    if (eq == std::string_view::npos)
      throw Error(Status::Config, path + " line " + std::to_string(line_no) +
                                      ": expected key=value");
    const std::string key{detail::trim(v.substr(0, eq))};
    const std::string value{detail::trim(v.substr(eq + 1))};
    set(key, value);
  }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (find_key(key) == nullptr)
    throw Error(Status::Config, "unknown config key '" + key + "'");
  values_[key] = value;
}

void ExperimentConfig::set_pair(const std::string& pair) {
  const std::size_t eq = pair.find('=');
  if (eq == std::string::npos)
    throw Error(Status::Config, "expected key=value, got '" + pair + "'");
  set(std::string(detail::trim(std::string_view(pair).substr(0, eq))),
      std::string(detail::trim(std::string_view(pair).substr(eq + 1))));
}

bool ExperimentConfig::known(const std::string& key) const {
  return find_key(key) != nullptr;
}

std::string ExperimentConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const ConfigKey* k = find_key(key);
  if (k == nullptr)
    throw Error(Status::Config, "unknown config key '" + key + "'");
  return k->def;
}

int ExperimentConfig::get_int(const std::string& key) const {
  const std::string v = get(key);
  int out = 0;
  if (!detail::parse_int(v, out)) bad_value(key, v, "an integer");
  return out;
}

int ExperimentConfig::get_int(const std::string& key, int lo, int hi) const {
  const int v = get_int(key);
  if (v < lo || v > hi)
    throw Error(Status::Config, "config key '" + key + "': " +
                                    std::to_string(v) + " outside [" +
                                    std::to_string(lo) + ", " +
                                    std::to_string(hi) + "]");
  return v;
}

double ExperimentConfig::get_double(const std::string& key) const {
  const std::string v = get(key);
  double out = 0.0;
  if (!detail::parse_double(v, out)) bad_value(key, v, "a number");
  return out;
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean (true/false)");
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key) const {
  const std::string v = get(key);
  std::uint64_t out = 0;
  if (!detail::parse_int(v, out)) bad_value(key, v, "an unsigned integer");
  return out;
}

namespace {

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const std::size_t comma = v.find(',', pos);
    const std::size_t end = comma == std::string::npos ? v.size() : comma;
    const std::string_view part =
        detail::trim(std::string_view(v).substr(pos, end - pos));
    if (!part.empty()) parts.emplace_back(part);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return parts;
}

}  // namespace

std::vector<int> ExperimentConfig::get_int_list(const std::string& key) const {
  const std::string v = get(key);
  std::vector<int> out;
  for (const std::string& part : split_list(v)) {
    int x = 0;
    if (!detail::parse_int(part, x)) bad_value(key, v, "a comma list of integers");
    out.push_back(x);
  }
  return out;
}

std::vector<double> ExperimentConfig::get_double_list(
    const std::string& key) const {
  const std::string v = get(key);
  std::vector<double> out;
  for (const std::string& part : split_list(v)) {
    double x = 0.0;
    if (!detail::parse_double(part, x)) bad_value(key, v, "a comma list of numbers");
    out.push_back(x);
  }
  return out;
}

std::string ExperimentConfig::help() {
  std::string out;
  for (const ConfigKey& k : kSchema) {
    out += "  ";
    out += k.key;
    std::size_t pad = std::string_view(k.key).size();
    for (; pad < 26; ++pad) out += ' ';
    out += k.help;
    out += " [";
    out += k.def[0] == '\0' ? "unset" : k.def;
    out += "]\n";
  }
  return out;
}

}  // namespace graphcf
