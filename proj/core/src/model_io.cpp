#include "trackcull/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trackcull/error.hpp"

namespace trackcull {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json header(std::string_view kind) {
  ordered_json doc;
  doc["format"] = kModelFormat;
  doc["kind"] = kind;
  return doc;
}

ordered_json to_json(const MlpHyperparams& hp) {
  return {{"hidden_layers", hp.hidden_layers}, {"batch_size", hp.batch_size},   {"initial_lr", hp.initial_lr},
          {"adam_beta1", hp.adam_beta1},       {"adam_beta2", hp.adam_beta2},   {"adam_eps", hp.adam_eps},
          {"max_epochs", hp.max_epochs},       {"lr_patience", hp.lr_patience}, {"lr_factor", hp.lr_factor},
          {"min_lr", hp.min_lr},               {"seed", hp.seed}};
}

ordered_json to_json(const ErtHyperparams& hp) {
  ordered_json doc = {{"n_estimators", hp.n_estimators},
                      {"criterion", "entropy"},
                      {"features_per_split", hp.features_per_split},
                      {"min_samples_split", hp.min_samples_split}};
  doc["max_depth"] = hp.max_depth ? ordered_json(*hp.max_depth) : ordered_json(nullptr);
  doc["seed"] = hp.seed;
  return doc;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

template <typename Int>
void append_integer(std::string& out, Int v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

template <typename Fn>
void append_column(std::string& out, std::string_view name, const std::vector<TreeNode>& nodes, Fn&& value) {
  out += '"';
  out += name;
  out += "\":[";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) out += ',';
    value(nodes[i]);
  }
  out += ']';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

/// Everything except the (potentially huge) "trees" array.
template <typename Input>
json parse_header(Input&& input, std::string_view expected_kind) {
  json doc;
  try {
    doc = json::parse(std::forward<Input>(input), [](int depth, json::parse_event_t event, json& parsed) {
      return !(depth == 1 && event == json::parse_event_t::key && parsed == "trees");
    });
  } catch (const json::exception& e) {
    throw ModelParseError(std::string("malformed model JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || !doc["format"].is_string()) {
    throw ModelParseError("model JSON has no \"format\" string");
  }
  if (doc["format"].get<std::string>() != kModelFormat) {
    throw ModelVersionError("unsupported model format \"" + doc["format"].get<std::string>() + "\", expected \"" +
                            std::string(kModelFormat) + "\"");
  }
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw ModelParseError("model JSON has no \"kind\" string");
  const auto kind = doc["kind"].get<std::string>();
  if (!expected_kind.empty() && kind != expected_kind) {
    throw ModelKindError("model kind is \"" + kind + "\", expected \"" + std::string(expected_kind) + "\"");
  }
  return doc;
}

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw ModelParseError(std::string("malformed model JSON: ") + e.what());
  }
}

/// Streams the "trees" array straight into node vectors.
class TreeSax : public nlohmann::json_sax<json> {
 public:
  std::vector<std::vector<TreeNode>> trees;

  bool null() override { return in_trees_ ? fail("null in tree data") : true; }
  bool boolean(bool) override { return in_trees_ ? fail("boolean in tree data") : true; }
  bool number_integer(number_integer_t v) override { return number(static_cast<double>(v), true, v); }
  bool number_unsigned(number_unsigned_t v) override {
    return number(static_cast<double>(v), true, static_cast<std::int64_t>(v));
  }
  bool number_float(number_float_t v, const string_t&) override { return number(v, false, 0); }
  bool string(string_t&) override { return in_trees_ ? fail("string in tree data") : true; }
  bool binary(binary_t&) override { return fail("binary value"); }

  bool start_object(std::size_t) override {
    ++depth_;
    if (in_trees_) {
      if (depth_ != 3) return fail("unexpected object in tree data");
      trees.emplace_back();
      sizes_.fill(0);
    }
    return true;
  }
  bool end_object() override {
    if (in_trees_ && depth_ == 3) {
      for (const auto s : sizes_) {
        if (s != trees.back().size()) return fail("tree columns differ in length");
      }
    }
    --depth_;
    return true;
  }
  bool key(string_t& k) override {
    if (depth_ == 1) top_key_ = k;
    if (in_trees_ && depth_ == 3) {
      column_ = column_index(k);
      if (column_ < 0) return fail("unknown tree field \"" + k + "\"");
    }
    return true;
  }
  bool start_array(std::size_t) override {
    ++depth_;
    if (depth_ == 2 && top_key_ == "trees") {
      in_trees_ = true;
      seen_trees_ = true;
    } else if (in_trees_ && depth_ != 4) {
      return fail("unexpected array in tree data");
    }
    return true;
  }
  bool end_array() override {
    if (in_trees_ && depth_ == 2) in_trees_ = false;
    --depth_;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
    throw ModelParseError(std::string("malformed model JSON: ") + ex.what());
  }

  bool seen_trees() const noexcept { return seen_trees_; }

 private:
  static int column_index(std::string_view k) {
    static constexpr std::string_view names[] = {"feature", "threshold", "left", "right", "n_invalid", "n_valid"};
    for (int i = 0; i < 6; ++i) {
      if (names[i] == k) return i;
    }
    return -1;
  }

  bool number(double as_double, bool integral, std::int64_t as_int) {
    if (!in_trees_) return true;
    if (depth_ != 4) return fail("unexpected number in tree data");
    auto& nodes = trees.back();
    auto& size = sizes_[static_cast<std::size_t>(column_)];
    if (size == nodes.size()) nodes.emplace_back();
    auto& node = nodes[size++];
    if (column_ == 1) {
      node.threshold = as_double;
      return true;
    }
    if (!integral) return fail("non-integer tree index or count");
    switch (column_) {
      case 0:
        node.feature = static_cast<std::int32_t>(as_int);
        break;
      case 2:
        node.left = static_cast<std::int32_t>(as_int);
        break;
      case 3:
        node.right = static_cast<std::int32_t>(as_int);
        break;
      case 4:
        if (as_int < 0) return fail("negative class count");
        node.n_invalid = static_cast<std::uint32_t>(as_int);
        break;
      default:
        if (as_int < 0) return fail("negative class count");
        node.n_valid = static_cast<std::uint32_t>(as_int);
        break;
    }
    return true;
  }

  bool fail(const std::string& what) { throw ModelParseError("malformed ERT model: " + what); }

  int depth_ = 0;
  bool in_trees_ = false;
  bool seen_trees_ = false;
  int column_ = -1;
  std::string top_key_;
  std::array<std::size_t, 6> sizes_{};
};

}  // namespace

std::string model_to_json(const MlpModel& model) {
  ordered_json doc = header("mlp");
  doc["hyperparams"] = to_json(model.hyperparams());
  const auto& info = model.training_info();
  doc["training"] = {{"epochs_run", info.epochs_run},
                     {"final_loss", info.final_loss},
                     {"final_lr", info.final_lr},
                     {"training_accuracy", info.training_accuracy},
                     {"loss_history", info.loss_history}};
  ordered_json layers = ordered_json::array();
  for (const auto& layer : model.layers()) {
    ordered_json weights = ordered_json::array();
    for (std::size_t i = 0; i < layer.inputs; ++i) {
      weights.push_back(std::vector<double>(layer.weights.begin() + static_cast<std::ptrdiff_t>(i * layer.outputs),
                                            layer.weights.begin() + static_cast<std::ptrdiff_t>((i + 1) * layer.outputs)));
    }
    layers.push_back({{"inputs", layer.inputs},
                      {"outputs", layer.outputs},
                      {"activation", to_string(layer.activation)},
                      {"weights", std::move(weights)},
                      {"bias", layer.bias}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump() + "\n";
}

namespace {

void write_ert(const ErtModel& model, std::ostream& stream) {
  ordered_json doc = header("ert");
  doc["hyperparams"] = to_json(model.hyperparams());
  const auto& info = model.training_info();
  doc["training"] = {{"training_accuracy", info.training_accuracy},
                     {"total_nodes", info.total_nodes},
                     {"training_rows", info.training_rows}};
  std::string out = doc.dump();
  out.pop_back();  // reopen the object for the streamed "trees" array
  out += ",\"trees\":[";
  for (std::size_t t = 0; t < model.trees().size(); ++t) {
    const auto& nodes = model.trees()[t].nodes();
    if (t > 0) out += ',';
    out += '{';
    append_column(out, "feature", nodes, [&](const TreeNode& n) { append_integer(out, n.feature); });
    out += ',';
    append_column(out, "threshold", nodes, [&](const TreeNode& n) { append_number(out, n.threshold); });
    out += ',';
    append_column(out, "left", nodes, [&](const TreeNode& n) { append_integer(out, n.left); });
    out += ',';
    append_column(out, "right", nodes, [&](const TreeNode& n) { append_integer(out, n.right); });
    out += ',';
    append_column(out, "n_invalid", nodes, [&](const TreeNode& n) { append_integer(out, n.n_invalid); });
    out += ',';
    append_column(out, "n_valid", nodes, [&](const TreeNode& n) { append_integer(out, n.n_valid); });
    out += '}';
    stream.write(out.data(), static_cast<std::streamsize>(out.size()));
    out.clear();
  }
  out += "]}\n";
  stream.write(out.data(), static_cast<std::streamsize>(out.size()));
}

/// `open()` yields a fresh parser input each call; the header and the trees
/// are read in separate passes so the trees never exist as a JSON DOM.
template <typename Open>
ErtModel read_ert(Open&& open) {
  const json doc = [&] {
    auto input = open();
    return parse_header(input, "ert");
  }();
  auto [hp, info] = guarded([&] {
    ErtHyperparams hp;
    const auto& h = doc.at("hyperparams");
    hp.n_estimators = h.at("n_estimators").get<std::size_t>();
    if (h.at("criterion").get<std::string>() != "entropy") throw ModelCorruptError("unsupported split criterion");
    hp.features_per_split = h.at("features_per_split").get<std::size_t>();
    hp.min_samples_split = h.at("min_samples_split").get<std::size_t>();
    if (!h.at("max_depth").is_null()) hp.max_depth = h.at("max_depth").get<std::size_t>();
    hp.seed = h.at("seed").get<std::uint64_t>();

    ErtTrainingInfo info;
    const auto& t = doc.at("training");
    info.training_accuracy = t.at("training_accuracy").get<double>();
    info.total_nodes = t.at("total_nodes").get<std::size_t>();
    info.training_rows = t.at("training_rows").get<std::size_t>();
    return std::pair{hp, info};
  });

  TreeSax sax;
  bool ok = false;
  try {
    auto input = open();
    ok = json::sax_parse(input, &sax);
  } catch (const json::exception& e) {
    throw ModelParseError(std::string("malformed model JSON: ") + e.what());
  }
  if (!ok || !sax.seen_trees()) throw ModelParseError("ERT model has no \"trees\" array");
  if (sax.trees.size() != hp.n_estimators) throw ModelCorruptError("tree count does not match n_estimators");

  std::vector<DecisionTree> trees;
  trees.reserve(sax.trees.size());
  for (auto& nodes : sax.trees) trees.emplace_back(std::move(nodes));
  return ErtModel(std::move(trees), hp, info);
}

std::ifstream open_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  return in;
}

}  // namespace

std::string model_to_json(const ErtModel& model) {
  std::ostringstream out;
  write_ert(model, out);
  return out.str();
}

MlpModel mlp_from_json(std::string_view text) {
  const json doc = parse_header(text, "mlp");
  return guarded([&] {
    MlpHyperparams hp;
    const auto& h = doc.at("hyperparams");
    hp.hidden_layers = h.at("hidden_layers").get<std::vector<std::size_t>>();
    hp.batch_size = h.at("batch_size").get<std::size_t>();
    hp.initial_lr = h.at("initial_lr").get<double>();
    hp.adam_beta1 = h.at("adam_beta1").get<double>();
    hp.adam_beta2 = h.at("adam_beta2").get<double>();
    hp.adam_eps = h.at("adam_eps").get<double>();
    hp.max_epochs = h.at("max_epochs").get<std::size_t>();
    hp.lr_patience = h.at("lr_patience").get<std::size_t>();
    hp.lr_factor = h.at("lr_factor").get<double>();
    hp.min_lr = h.at("min_lr").get<double>();
    hp.seed = h.at("seed").get<std::uint64_t>();

    MlpTrainingInfo info;
    const auto& t = doc.at("training");
    info.epochs_run = t.at("epochs_run").get<std::size_t>();
    info.final_loss = t.at("final_loss").get<double>();
    info.final_lr = t.at("final_lr").get<double>();
    info.training_accuracy = t.at("training_accuracy").get<double>();
    info.loss_history = t.at("loss_history").get<std::vector<double>>();

    std::vector<DenseLayer> layers;
    for (const auto& l : doc.at("layers")) {
      DenseLayer layer;
      layer.inputs = l.at("inputs").get<std::size_t>();
      layer.outputs = l.at("outputs").get<std::size_t>();
      const auto activation = l.at("activation").get<std::string>();
      if (activation == "relu") {
        layer.activation = Activation::Relu;
      } else if (activation == "softmax") {
        layer.activation = Activation::Softmax;
      } else {
        throw ModelCorruptError("unknown activation \"" + activation + "\"");
      }
      const auto& weights = l.at("weights");
      if (!weights.is_array() || weights.size() != layer.inputs) {
        throw ModelCorruptError("weight matrix row count does not match layer inputs");
      }
      for (const auto& row : weights) {
        const auto values = row.get<std::vector<double>>();
        if (values.size() != layer.outputs) throw ModelCorruptError("weight matrix row has wrong length");
        layer.weights.insert(layer.weights.end(), values.begin(), values.end());
      }
      layer.bias = l.at("bias").get<std::vector<double>>();
      layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(layers), std::move(hp), std::move(info));
  });
}

ErtModel ert_from_json(std::string_view text) {
  return read_ert([text] { return text; });
}

void save_model(const MlpModel& model, const std::filesystem::path& path) { write_file(path, model_to_json(model)); }

void save_model(const ErtModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_ert(model, out);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

MlpModel load_mlp(const std::filesystem::path& path) { return mlp_from_json(read_file(path)); }

ErtModel load_ert(const std::filesystem::path& path) {
  return read_ert([&path] { return open_model(path); });
}

std::unique_ptr<Classifier> load_model(const std::filesystem::path& path) {
  const json doc = [&] {
    auto in = open_model(path);
    return parse_header(in, "");
  }();
  const auto kind = doc["kind"].get<std::string>();
  if (kind == "mlp") return std::make_unique<MlpModel>(load_mlp(path));
  if (kind == "ert") return std::make_unique<ErtModel>(load_ert(path));
  throw ModelKindError("unknown model kind \"" + kind + "\"");
}

}  // namespace trackcull
