#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loadcnn/training.hpp"

namespace loadcnn {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'L', 'C', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

json spec_to_json(const ConvLayerSpec& s) {
  return json{{"kh", s.kernel_height},
              {"kw", s.kernel_width},
              {"cin", s.in_channels},
              {"cout", s.out_channels},
              {"padding", s.padding == Padding::same ? "same" : "valid"}};
}

ConvLayerSpec spec_from_json(const json& j) {
  ConvLayerSpec s;
  s.kernel_height = j.at("kh").get<int>();
  s.kernel_width = j.at("kw").get<int>();
  s.in_channels = j.at("cin").get<int>();
  s.out_channels = j.at("cout").get<int>();
  const std::string pad = j.at("padding").get<std::string>();
  if (pad != "same" && pad != "valid") throw DataError("corrupt checkpoint: bad padding mode");
  s.padding = pad == "same" ? Padding::same : Padding::valid;
  return s;
}

json pools_to_json(const std::vector<PoolPlacement>& pools) {
  json arr = json::array();
  for (const PoolPlacement& p : pools) {
    arr.push_back({{"after", p.after_layer},
                   {"wh", p.pool.window_height},
                   {"ww", p.pool.window_width}});
  }
  return arr;
}

std::vector<PoolPlacement> pools_from_json(const json& arr) {
  std::vector<PoolPlacement> pools;
  for (const json& j : arr) {
    pools.push_back(
        {j.at("after").get<int>(), PoolSpec{j.at("wh").get<int>(), j.at("ww").get<int>()}});
  }
  return pools;
}

json model_config_to_json(const LoadCNNConfig& c) {
  json layers_h = json::array(), layers_v = json::array();
  for (const ConvLayerSpec& s : c.horizontal) layers_h.push_back(spec_to_json(s));
  for (const ConvLayerSpec& s : c.vertical) layers_v.push_back(spec_to_json(s));
  return json{{"horizontal", layers_h},
              {"vertical", layers_v},
              {"horizontal_pools", pools_to_json(c.horizontal_pools)},
              {"vertical_pools", pools_to_json(c.vertical_pools)},
              {"history_days", c.history_days},
              {"slots_per_day", c.slots_per_day},
              {"id_size", c.id_size},
              {"month_size", c.month_size},
              {"day_size", c.day_size},
              {"week_size", c.week_size},
              {"output_size", c.output_size}};
}

LoadCNNConfig model_config_from_json(const json& j) {
  LoadCNNConfig c;
  for (const json& s : j.at("horizontal")) c.horizontal.push_back(spec_from_json(s));
  for (const json& s : j.at("vertical")) c.vertical.push_back(spec_from_json(s));
  c.horizontal_pools = pools_from_json(j.at("horizontal_pools"));
  c.vertical_pools = pools_from_json(j.at("vertical_pools"));
  c.history_days = j.at("history_days").get<int>();
  c.slots_per_day = j.at("slots_per_day").get<int>();
  c.id_size = j.at("id_size").get<int>();
  c.month_size = j.at("month_size").get<int>();
  c.day_size = j.at("day_size").get<int>();
  c.week_size = j.at("week_size").get<int>();
  c.output_size = j.at("output_size").get<int>();
  return c;
}

json train_config_to_json(const TrainConfig& t) {
  return json{{"batch_size", t.batch_size},
              {"max_epochs", t.max_epochs},
              {"learning_rate", t.learning_rate},
              {"decay_rate", t.decay_rate},
              {"validation_interval_steps", t.validation_interval_steps},
              {"seed", t.seed},
              {"optimizer", to_string(t.optimizer)},
              {"full_validation", t.full_validation},
              {"max_steps", t.max_steps}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig t;
  t.batch_size = j.at("batch_size").get<int>();
  t.max_epochs = j.at("max_epochs").get<int>();
  t.learning_rate = j.at("learning_rate").get<double>();
  t.decay_rate = j.at("decay_rate").get<double>();
  t.validation_interval_steps = j.at("validation_interval_steps").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  t.full_validation = j.at("full_validation").get<bool>();
  t.max_steps = j.at("max_steps").get<long>();
  return t;
}

json split_spec_to_json(const SplitSpec& s) {
  return json{{"test_days", s.test_days},
              {"validation_days", s.validation_days},
              {"validation_range_lo", s.validation_range_lo},
              {"validation_range_hi", s.validation_range_hi},
              {"seed", s.seed}};
}

SplitSpec split_spec_from_json(const json& j) {
  SplitSpec s;
  s.test_days = j.at("test_days").get<int>();
  s.validation_days = j.at("validation_days").get<int>();
  s.validation_range_lo = j.at("validation_range_lo").get<int>();
  s.validation_range_hi = j.at("validation_range_hi").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("corrupt checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  json meta{{"model_config", model_config_to_json(checkpoint.model_config)},
            {"train_config", train_config_to_json(checkpoint.train_config)},
            {"split_spec", split_spec_to_json(checkpoint.split_spec)},
            {"epoch_date", checkpoint.epoch_date.to_string()},
            {"loss_best", checkpoint.loss_best},
            {"step", checkpoint.step},
            {"epoch", checkpoint.epoch},
            {"id_hash", checkpoint.id_hash},
            {"n_customers", checkpoint.n_customers},
            {"normalize", checkpoint.normalize},
            {"clamp_nonneg", checkpoint.clamp_nonneg}};
  const std::string meta_text = meta.dump();

  std::vector<std::uint8_t> out;
  out.reserve(meta_text.size() + checkpoint.params.value_count() * 4 + 1024);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u64(out, meta_text.size());
  out.insert(out.end(), meta_text.begin(), meta_text.end());

  checkpoint.params.for_each([&out](const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, static_cast<float>(t[i]));
  });

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw DataError("cannot write checkpoint to " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("failed writing checkpoint to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(file)),
                                std::istreambuf_iterator<char>());
  Reader r{buf};

  if (r.bytes(4) != std::string(kMagic, 4)) {
    throw DataError("corrupt checkpoint: bad magic bytes in " + path.string());
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                    std::to_string(kVersion) + ")");
  }
  const std::uint64_t meta_len = r.u64();
  json meta;
  try {
    meta = json::parse(r.bytes(meta_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint: bad metadata block: ") + e.what());
  }

  Checkpoint cp;
  try {
    cp.model_config = model_config_from_json(meta.at("model_config"));
    cp.train_config = train_config_from_json(meta.at("train_config"));
    cp.split_spec = split_spec_from_json(meta.at("split_spec"));
    cp.epoch_date = Date::from_string(meta.at("epoch_date").get<std::string>());
    cp.loss_best = meta.at("loss_best").get<double>();
    cp.step = meta.at("step").get<long>();
    cp.epoch = meta.at("epoch").get<int>();
    cp.id_hash = meta.at("id_hash").get<std::uint64_t>();
    cp.n_customers = meta.at("n_customers").get<int>();
    cp.normalize = meta.at("normalize").get<bool>();
    cp.clamp_nonneg = meta.at("clamp_nonneg").get<bool>();
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint: missing metadata field: ") + e.what());
  }

  cp.params = zero_params(cp.model_config);
  cp.params.for_each([&r](const std::string& name, Tensor& t) {
    const std::uint32_t name_len = r.u32();
    const std::string stored = r.bytes(name_len);
    if (stored != name) {
      throw DataError("corrupt checkpoint: expected tensor '" + name + "', found '" + stored +
                      "'");
    }
    const std::uint32_t rank = r.u32();
    if (rank != t.rank()) {
      throw DataError("corrupt checkpoint: tensor '" + name + "' has rank " +
                      std::to_string(rank) + ", config expects " + std::to_string(t.rank()));
    }
    for (std::size_t a = 0; a < t.rank(); ++a) {
      const std::uint32_t dim = r.u32();
      if (dim != t.dim(a)) {
        throw DataError("corrupt checkpoint: tensor '" + name + "' dimension " +
                        std::to_string(a) + " is " + std::to_string(dim) +
                        ", config expects " + std::to_string(t.dim(a)));
      }
    }
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(r.f32());
  });
  if (r.pos != buf.size()) {
    throw DataError("corrupt checkpoint: " + std::to_string(buf.size() - r.pos) +
                    " trailing bytes");
  }
  return cp;
}

}  // namespace loadcnn
