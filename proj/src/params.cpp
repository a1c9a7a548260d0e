#include "graphcf/params.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "io_util.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

namespace graphcf {

namespace {

struct KindName {
  ModelKind kind;
  const char* name;
};

constexpr std::array<KindName, 8> kKindNames{{
    {ModelKind::MF, "mf"},
    {ModelKind::SVDPP, "svdpp"},
    {ModelKind::WSVDPP, "w-svdpp"},
    {ModelKind::ASVDPP, "a-svdpp"},
    {ModelKind::GCF, "gcf"},
    {ModelKind::WGCF, "w-gcf"},
    {ModelKind::AGCF, "a-gcf"},
    {ModelKind::AGCF2, "a-gcf2"},
}};

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  for (const auto& kn : kKindNames)
    if (name == kn.name) return kn.kind;
  throw Error(Status::Config,
              "unknown model kind '" + name + "' (valid: " + model_kind_list() + ")");
}

const char* model_kind_name(ModelKind kind) {
  for (const auto& kn : kKindNames)
    if (kind == kn.kind) return kn.name;
  return "?";
}

std::string model_kind_list() {
  std::string out;
  for (const auto& kn : kKindNames) {
    if (!out.empty()) out += ", ";
    out += kn.name;
  }
  return out;
}

AggMode user_agg_mode(ModelKind kind) {
  switch (kind) {
    case ModelKind::MF: return AggMode::None;
    case ModelKind::SVDPP:
    case ModelKind::GCF: return AggMode::Uniform;
    case ModelKind::WSVDPP:
    case ModelKind::WGCF: return AggMode::Weighted;
    case ModelKind::ASVDPP:
    case ModelKind::AGCF:
    case ModelKind::AGCF2: return AggMode::Attentive;
  }
  return AggMode::None;
}

AggMode item_agg_mode(ModelKind kind) {
  switch (kind) {
    case ModelKind::MF:
    case ModelKind::SVDPP:
    case ModelKind::WSVDPP:
    case ModelKind::ASVDPP: return AggMode::None;
    case ModelKind::GCF: return AggMode::Uniform;
    case ModelKind::WGCF: return AggMode::Weighted;
    case ModelKind::AGCF:
    case ModelKind::AGCF2: return AggMode::Attentive;
  }
  return AggMode::None;
}

MlpParams make_mlp(int input_width, std::span<const int> hidden) {
  if (input_width <= 0)
    throw Error(Status::Config, "attention MLP needs a positive input width");
  MlpParams mlp;
  int in = input_width;
  for (int h : hidden) {
    if (h <= 0) throw Error(Status::Config, "attention hidden widths must be positive");
    MlpLayer layer;
    layer.in = in;
    layer.out = h;
    layer.w.assign(static_cast<std::size_t>(h) * in, 0.0);
    layer.b.assign(h, 0.0);
    mlp.layers.push_back(std::move(layer));
    in = h;
  }
  MlpLayer last;
  last.in = in;
  last.out = 1;
  last.w.assign(in, 0.0);
  last.b.assign(1, 0.0);
  mlp.layers.push_back(std::move(last));
  return mlp;
}

namespace {

// Wide enough that the interaction term has gradient signal from the start;
// a much smaller init leaves SGD crawling along the p*q saddle for dozens of
// epochs before the factors take off.
constexpr double kInitHalfWidth = 0.1;

EmbeddingTable make_table(Id rows, int dim) {
  EmbeddingTable t;
  t.rows = rows;
  t.dim = dim;
  t.data.assign(static_cast<std::size_t>(rows) * dim, 0.0);
  return t;
}

void fill_uniform(std::span<double> v, std::mt19937_64& rng) {
  for (double& x : v) x = uniform_range(rng, -kInitHalfWidth, kInitHalfWidth);
}

void fill_mlp(MlpParams& mlp, std::mt19937_64& rng) {
  for (MlpLayer& layer : mlp.layers) fill_uniform(layer.w, rng);
}

}  // namespace

ModelParams init_params(const ModelSpec& spec, Id n_users, Id n_items,
                        std::uint64_t seed) {
  if (n_users <= 0 || n_items <= 0)
    throw Error(Status::Config, "model needs positive user and item counts");
  if (spec.factors <= 0 || spec.feedback_factors <= 0 || spec.feedback_width <= 0)
    throw Error(Status::Config, "factor dimensions and feedback width must be positive");
  if (has_user_feedback(spec.kind) && spec.feedback_factors != spec.factors)
    throw Error(Status::Config,
                "feedback dimension K' must equal K: the feedback aggregate is "
                "added to the latent vectors");
  if (spec.attention.temperature <= 0.0)
    throw Error(Status::Config, "softmax temperature must be positive");

  const int K = spec.factors;
  const int Kp = spec.feedback_factors;
  const ModelKind kind = spec.kind;

  ModelParams p;
  p.spec = spec;
  p.n_users = n_users;
  p.n_items = n_items;
  p.b_user.assign(n_users, 0.0);
  p.b_item.assign(n_items, 0.0);

  std::mt19937_64 rng(mix_seed(seed, /*stream=*/0x1417));
  p.P = make_table(n_users + 1, K);
  fill_uniform(p.P.data, rng);
  p.Q = make_table(n_items + 1, K);
  fill_uniform(p.Q.data, rng);

  if (has_user_feedback(kind)) {
    p.Y = make_table(n_items + 1, Kp);
    fill_uniform(p.Y.data, rng);
  }
  if (has_item_feedback(kind)) {
    p.X = make_table(n_users + 1, Kp);
    fill_uniform(p.X.data, rng);
  }
  if (has_step_two(kind)) {
    p.Y2 = make_table(n_users + 1, Kp);
    fill_uniform(p.Y2.data, rng);
    p.X2 = make_table(n_items + 1, Kp);
    fill_uniform(p.X2.data, rng);
  }
  if (has_weights(kind)) {
    // Center the weight factors so the pair weight <alpha, beta> starts at
    // the uniform value k^-1/2: the weighted model begins as its uniform
    // counterpart and learns deviations. A zero-centered start leaves phi
    // near zero, which kills the aggregate and the factors' own gradient.
    const double m = std::sqrt(
        1.0 / (std::sqrt(static_cast<double>(spec.feedback_width)) * Kp));
    p.alpha = make_table(n_users + 1, Kp);
    fill_uniform(p.alpha.data, rng);
    for (double& v : p.alpha.data) v += m;
    p.beta = make_table(n_items + 1, Kp);
    fill_uniform(p.beta.data, rng);
    for (double& v : p.beta.data) v += m;
  }
  if (has_attention(kind)) {
    const int in_width = K + Kp;
    p.attn_user = make_mlp(in_width, spec.attention.hidden);
    fill_mlp(p.attn_user, rng);
    if (item_agg_mode(kind) == AggMode::Attentive) {
      p.attn_item = make_mlp(in_width, spec.attention.hidden);
      fill_mlp(p.attn_item, rng);
    }
    if (has_step_two(kind)) {
      p.attn_user2 = make_mlp(in_width, spec.attention.hidden);
      fill_mlp(p.attn_user2, rng);
      p.attn_item2 = make_mlp(in_width, spec.attention.hidden);
      fill_mlp(p.attn_item2, rng);
    }
  }
  validate_params(p);
  return p;
}

void randomize_params(ModelParams& p, double half_width, std::uint64_t seed) {
  if (half_width <= 0.0)
    throw Error(Status::InvalidArgument, "half_width must be positive");
  std::mt19937_64 rng(mix_seed(seed, /*stream=*/0x7a9d));
  auto fill = [&](std::span<double> v) {
    for (double& x : v) x = uniform_range(rng, -half_width, half_width);
  };
  fill(p.P.data);
  fill(p.Q.data);
  fill(p.Y.data);
  fill(p.X.data);
  fill(p.Y2.data);
  fill(p.X2.data);
  fill(p.alpha.data);
  fill(p.beta.data);
  fill(p.b_user);
  fill(p.b_item);
  p.b_global = uniform_range(rng, -half_width, half_width);
  auto fill_net = [&](MlpParams& m) {
    for (MlpLayer& l : m.layers) {
      fill(l.w);
      fill(l.b);
    }
  };
  fill_net(p.attn_user);
  fill_net(p.attn_item);
  fill_net(p.attn_user2);
  fill_net(p.attn_item2);
}

void validate_params(const ModelParams& p) {
  const ModelKind kind = p.spec.kind;
  const int K = p.spec.factors;
  const int Kp = p.spec.feedback_factors;

  auto need_table = [&](const EmbeddingTable& t, Id rows, int dim,
                        const char* name) {
    if (t.rows != rows || t.dim != dim ||
        t.data.size() != static_cast<std::size_t>(rows) * dim)
      throw Error(Status::Config, std::string("model parameter block '") + name +
                                      "' missing or mis-shaped for kind " +
                                      model_kind_name(kind));
  };
  need_table(p.P, p.n_users + 1, K, "P");
  need_table(p.Q, p.n_items + 1, K, "Q");
  if (has_user_feedback(kind)) need_table(p.Y, p.n_items + 1, Kp, "Y");
  if (has_item_feedback(kind)) need_table(p.X, p.n_users + 1, Kp, "X");
  if (has_step_two(kind)) {
    need_table(p.Y2, p.n_users + 1, Kp, "Y2");
    need_table(p.X2, p.n_items + 1, Kp, "X2");
  }
  if (has_weights(kind)) {
    need_table(p.alpha, p.n_users + 1, Kp, "alpha");
    need_table(p.beta, p.n_items + 1, Kp, "beta");
  }
  auto need_mlp = [&](const MlpParams& mlp, const char* name) {
    if (mlp.empty() || mlp.input_width() != K + Kp ||
        mlp.layers.back().out != 1)
      throw Error(Status::Config, std::string("attention network '") + name +
                                      "' missing or mis-shaped for kind " +
                                      model_kind_name(kind));
  };
  if (has_attention(kind)) {
    need_mlp(p.attn_user, "attn_user");
    if (item_agg_mode(kind) == AggMode::Attentive) need_mlp(p.attn_item, "attn_item");
    if (has_step_two(kind)) {
      need_mlp(p.attn_user2, "attn_user2");
      need_mlp(p.attn_item2, "attn_item2");
    }
  }
  if (p.b_user.size() != static_cast<std::size_t>(p.n_users) ||
      p.b_item.size() != static_cast<std::size_t>(p.n_items))
    throw Error(Status::Config, "bias vectors mis-sized");
}

// --- snapshot ----------------------------------------------------------------

namespace {

constexpr char kSnapshotMagic[8] = {'G', 'C', 'F', 'S', 'N', 'A', 'P', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw Error(Status::Parse, "truncated snapshot: " + path);
  return v;
}

double get_f64(std::istream& in, const std::string& path) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw Error(Status::Parse, "truncated snapshot: " + path);
  return v;
}

void get_doubles(std::istream& in, std::vector<double>& v, const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double))))
    throw Error(Status::Parse, "truncated snapshot: " + path);
}

void put_mlp(std::ostream& out, const MlpParams& mlp) {
  for (const MlpLayer& layer : mlp.layers) {
    put_doubles(out, layer.w);
    put_doubles(out, layer.b);
  }
}

void get_mlp(std::istream& in, MlpParams& mlp, const std::string& path) {
  for (MlpLayer& layer : mlp.layers) {
    get_doubles(in, layer.w, path);
    get_doubles(in, layer.b, path);
  }
}

}  // namespace

void save_params(const ModelParams& p, const std::string& path) {
  validate_params(p);
  auto out = detail::open_out(path);
  out.write(kSnapshotMagic, sizeof kSnapshotMagic);
  put_u32(out, static_cast<std::uint32_t>(p.spec.kind));
  put_u32(out, static_cast<std::uint32_t>(p.spec.factors));
  put_u32(out, static_cast<std::uint32_t>(p.spec.feedback_factors));
  put_u32(out, static_cast<std::uint32_t>(p.spec.feedback_width));
  put_u32(out, static_cast<std::uint32_t>(p.n_users));
  put_u32(out, static_cast<std::uint32_t>(p.n_items));
  put_u32(out, static_cast<std::uint32_t>(p.spec.scale_kind));
  put_u32(out, static_cast<std::uint32_t>(p.spec.norm_mode));
  put_u32(out, p.spec.mask_pad ? 1u : 0u);
  put_u32(out, static_cast<std::uint32_t>(p.spec.attention.hidden.size()));
  put_f64(out, p.spec.attention.temperature);
  for (int h : p.spec.attention.hidden) put_u32(out, static_cast<std::uint32_t>(h));

  put_doubles(out, p.P.data);
  put_doubles(out, p.Q.data);
  if (has_user_feedback(p.spec.kind)) put_doubles(out, p.Y.data);
  if (has_item_feedback(p.spec.kind)) put_doubles(out, p.X.data);
  if (has_step_two(p.spec.kind)) {
    put_doubles(out, p.Y2.data);
    put_doubles(out, p.X2.data);
  }
  put_doubles(out, p.b_user);
  put_doubles(out, p.b_item);
  put_f64(out, p.b_global);
  if (has_weights(p.spec.kind)) {
    put_doubles(out, p.alpha.data);
    put_doubles(out, p.beta.data);
  }
  if (has_attention(p.spec.kind)) {
    put_mlp(out, p.attn_user);
    if (item_agg_mode(p.spec.kind) == AggMode::Attentive) put_mlp(out, p.attn_item);
    if (has_step_two(p.spec.kind)) {
      put_mlp(out, p.attn_user2);
      put_mlp(out, p.attn_item2);
    }
  }
  if (!out) throw Error(Status::Io, "write failed: " + path);
}

ModelParams load_params(const std::string& path) {
  auto in = detail::open_in(path);
  char magic[8] = {};
  if (!in.read(magic, sizeof magic) ||
      std::memcmp(magic, kSnapshotMagic, sizeof magic) != 0)
    throw Error(Status::Parse, "not a model snapshot: " + path);

  ModelSpec spec;
  const auto kind_raw = get_u32(in, path);
  if (kind_raw > static_cast<std::uint32_t>(ModelKind::AGCF2))
    throw Error(Status::Parse, "snapshot has unknown model kind: " + path);
  spec.kind = static_cast<ModelKind>(kind_raw);
  spec.factors = static_cast<int>(get_u32(in, path));
  spec.feedback_factors = static_cast<int>(get_u32(in, path));
  spec.feedback_width = static_cast<int>(get_u32(in, path));
  const Id n_users = static_cast<Id>(get_u32(in, path));
  const Id n_items = static_cast<Id>(get_u32(in, path));
  spec.scale_kind = static_cast<ScaleKind>(get_u32(in, path));
  spec.norm_mode = static_cast<NormMode>(get_u32(in, path));
  spec.mask_pad = get_u32(in, path) != 0;
  const auto n_hidden = get_u32(in, path);
  spec.attention.temperature = get_f64(in, path);
  spec.attention.hidden.clear();
  for (std::uint32_t h = 0; h < n_hidden; ++h)
    spec.attention.hidden.push_back(static_cast<int>(get_u32(in, path)));

  // Build zeroed blocks with the right shapes, then overwrite from the file.
  ModelParams p = init_params(spec, n_users, n_items, /*seed=*/0);
  get_doubles(in, p.P.data, path);
  get_doubles(in, p.Q.data, path);
  if (has_user_feedback(spec.kind)) get_doubles(in, p.Y.data, path);
  if (has_item_feedback(spec.kind)) get_doubles(in, p.X.data, path);
  if (has_step_two(spec.kind)) {
    get_doubles(in, p.Y2.data, path);
    get_doubles(in, p.X2.data, path);
  }
  get_doubles(in, p.b_user, path);
  get_doubles(in, p.b_item, path);
  p.b_global = get_f64(in, path);
  if (has_weights(spec.kind)) {
    get_doubles(in, p.alpha.data, path);
    get_doubles(in, p.beta.data, path);
  }
  if (has_attention(spec.kind)) {
    get_mlp(in, p.attn_user, path);
    if (item_agg_mode(spec.kind) == AggMode::Attentive) get_mlp(in, p.attn_item, path);
    if (has_step_two(spec.kind)) {
      get_mlp(in, p.attn_user2, path);
      get_mlp(in, p.attn_item2, path);
    }
  }
  in.peek();
  if (!in.eof()) throw Error(Status::Parse, "trailing bytes in snapshot: " + path);
  return p;
}

}  // namespace graphcf
