#include "stann/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "stann/errors.hpp"

namespace stann {

namespace {

using ordered_json = nlohmann::ordered_json;

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = is.get();
    if (c == EOF) throw DataError("checkpoint: truncated header");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

void put_f32(std::ostream& os, float f) {
  std::uint32_t u = 0;
  std::memcpy(&u, &f, 4);
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((u >> (8 * i)) & 0xff));
}

float get_f32(std::istream& is, const char* what) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) {
    const int c = is.get();
    if (c == EOF) throw DataError(std::string(what) + ": truncated payload");
    u |= static_cast<std::uint32_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  float f = 0.0f;
  std::memcpy(&f, &u, 4);
  return f;
}

ordered_json parse_json_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string(what) + ": cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw DataError(std::string(what) + ": bad json in " + path.string() + ": " + e.what());
  }
}

}  // namespace

// ---------- dataset container ----------

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  const int n = static_cast<int>(dataset.sensor_labels.size());
  std::filesystem::create_directories(dir / "payloads");

  std::vector<Sensor> sensors;
  for (int i = 0; i < n; ++i) {
    sensors.push_back({dataset.sensor_labels[static_cast<std::size_t>(i)],
                       dataset.sensor_positions(i, 0), dataset.sensor_positions(i, 1),
                       dataset.sensor_positions(i, 2)});
  }
  Montage(sensors).to_csv(dir / "montage.csv");

  ordered_json manifest;
  manifest["format"] = "stann-dataset";
  manifest["version"] = 1;
  manifest["montage"] = "montage.csv";
  manifest["fs"] = dataset.fs;
  manifest["scale_max"] = dataset.scale_max;
  manifest["n_channels"] = n;
  manifest["trials"] = ordered_json::array();

  for (std::size_t idx = 0; idx < dataset.trials.size(); ++idx) {
    const TrialRecording& trial = dataset.trials[idx];
    if (trial.pretrial.rows() != n || trial.data.rows() != n) {
      throw DataError("dataset: trial '" + trial.trial_id + "' channel count mismatch");
    }
    std::ostringstream name;
    name << "payloads/trial_" << std::setfill('0') << std::setw(4) << idx << ".f32";

    ordered_json entry;
    entry["subject_id"] = trial.subject_id;
    entry["trial_id"] = trial.trial_id;
    entry["ratings"] = ordered_json::object();
    for (const auto& [key, value] : trial.ratings) entry["ratings"][key] = value;
    entry["pretrial_samples"] = trial.pretrial.cols();
    entry["trial_samples"] = trial.data.cols();
    entry["payload"] = name.str();
    manifest["trials"].push_back(entry);

    std::ofstream out(dir / name.str(), std::ios::binary);
    if (!out) throw DataError("dataset: cannot write " + (dir / name.str()).string());
    for (Eigen::Index ch = 0; ch < n; ++ch) {
      for (Eigen::Index t = 0; t < trial.pretrial.cols(); ++t) put_f32(out, trial.pretrial(ch, t));
      for (Eigen::Index t = 0; t < trial.data.cols(); ++t) put_f32(out, trial.data(ch, t));
    }
  }

  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("dataset: cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const ordered_json manifest = parse_json_file(dir / "manifest.json", "dataset");
  if (!manifest.contains("version") || manifest["version"].get<int>() != 1) {
    throw DataError("dataset: unsupported container version in " + dir.string());
  }
  const Montage montage = Montage::from_csv(dir / manifest.value("montage", "montage.csv"));
  const int n = manifest.at("n_channels").get<int>();
  if (n != montage.size()) {
    throw DataError("dataset: manifest lists " + std::to_string(n) +
                    " channels but the montage has " + std::to_string(montage.size()));
  }

  Dataset ds;
  ds.fs = manifest.at("fs").get<double>();
  ds.scale_max = manifest.at("scale_max").get<int>();
  ds.sensor_labels = montage.labels();
  ds.sensor_positions = montage.positions();

  for (const auto& entry : manifest.at("trials")) {
    TrialRecording trial;
    trial.subject_id = entry.at("subject_id").get<std::string>();
    trial.trial_id = entry.at("trial_id").get<std::string>();
    trial.fs = ds.fs;
    for (const auto& [key, value] : entry.at("ratings").items()) {
      trial.ratings[key] = value.get<double>();
    }
    const Eigen::Index t_pre = entry.at("pretrial_samples").get<Eigen::Index>();
    const Eigen::Index t_data = entry.at("trial_samples").get<Eigen::Index>();
    const std::filesystem::path payload = dir / entry.at("payload").get<std::string>();

    const std::uintmax_t expected =
        static_cast<std::uintmax_t>(n) * static_cast<std::uintmax_t>(t_pre + t_data) * 4u;
    std::error_code ec;
    const std::uintmax_t actual = std::filesystem::file_size(payload, ec);
    if (ec || actual != expected) {
      throw DataError("dataset: payload for trial '" + trial.trial_id + "' must be " +
                      std::to_string(expected) + " bytes, found " +
                      (ec ? "no file" : std::to_string(actual)));
    }

    std::ifstream in(payload, std::ios::binary);
    trial.pretrial.resize(n, t_pre);
    trial.data.resize(n, t_data);
    for (Eigen::Index ch = 0; ch < n; ++ch) {
      for (Eigen::Index t = 0; t < t_pre; ++t) trial.pretrial(ch, t) = get_f32(in, "dataset");
      for (Eigen::Index t = 0; t < t_data; ++t) trial.data(ch, t) = get_f32(in, "dataset");
    }
    ds.trials.push_back(std::move(trial));
  }
  return ds;
}

// ---------- checkpoints ----------

namespace {

constexpr const char* kCheckpointMagic = "STANNCKPT1\n";

ordered_json config_to_json(const StannConfig& c) {
  ordered_json j;
  j["n_channels"] = c.n_channels;
  j["timesteps"] = c.timesteps;
  j["columns"] = ordered_json::array();
  for (const auto& col : c.columns) {
    ordered_json stages = ordered_json::array();
    for (const auto& s : col.stages) {
      stages.push_back({{"filters", s.filters}, {"kh", s.kernel_h}, {"kw", s.kernel_w}});
    }
    j["columns"].push_back(stages);
  }
  j["ran_hidden"] = c.ran_hidden;
  j["ste_dropout1"] = c.ste_dropout1;
  j["ste_dropout2"] = c.ste_dropout2;
  j["ran_dropout1"] = c.ran_dropout1;
  j["ran_dropout2"] = c.ran_dropout2;
  j["dense_width"] = c.dense_width;
  j["sensor_labels"] = c.sensor_labels;
  return j;
}

StannConfig config_from_json(const ordered_json& j) {
  StannConfig c;
  c.n_channels = j.at("n_channels").get<int>();
  c.timesteps = j.at("timesteps").get<int>();
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& stages = j.at("columns").at(i);
    for (std::size_t s = 0; s < 3; ++s) {
      c.columns[i].stages[s].filters = stages.at(s).at("filters").get<int>();
      c.columns[i].stages[s].kernel_h = stages.at(s).at("kh").get<int>();
      c.columns[i].stages[s].kernel_w = stages.at(s).at("kw").get<int>();
    }
  }
  c.ran_hidden = j.at("ran_hidden").get<int>();
  c.ste_dropout1 = j.at("ste_dropout1").get<double>();
  c.ste_dropout2 = j.at("ste_dropout2").get<double>();
  c.ran_dropout1 = j.at("ran_dropout1").get<double>();
  c.ran_dropout2 = j.at("ran_dropout2").get<double>();
  c.dense_width = j.at("dense_width").get<int>();
  c.sensor_labels = j.at("sensor_labels").get<std::vector<std::string>>();
  return c;
}

ordered_json header_for(const StannModel& model, const AdamState* optimizer) {
  ordered_json h;
  h["format"] = "stann-checkpoint";
  h["version"] = 1;
  h["seed"] = model.seed();
  h["rng"] = const_cast<StannModel&>(model).rng().save_state();
  h["config"] = config_to_json(model.config());
  h["blocks"] = ordered_json::array();
  for (const auto& block : model.blocks()) {
    ordered_json b;
    b["id"] = block.id;
    b["trainable"] = block.trainable;
    b["params"] = ordered_json::array();
    for (const auto& p : block.params) {
      b["params"].push_back({{"name", p.name}, {"shape", p.shape}});
    }
    b["buffers"] = ordered_json::array();
    for (const auto& p : block.buffers) {
      b["buffers"].push_back({{"name", p.name}, {"shape", p.shape}});
    }
    h["blocks"].push_back(b);
  }
  if (optimizer != nullptr) {
    h["optimizer"] = {{"t", optimizer->t},
                      {"lr", optimizer->hyper.lr},
                      {"beta1", optimizer->hyper.beta1},
                      {"beta2", optimizer->hyper.beta2},
                      {"eps", optimizer->hyper.eps}};
  } else {
    h["optimizer"] = nullptr;
  }
  return h;
}

ordered_json read_header(std::istream& is, const std::filesystem::path& path) {
  std::string magic(std::strlen(kCheckpointMagic), '\0');
  is.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!is || magic != kCheckpointMagic) {
    throw DataError("checkpoint: " + path.string() + " is not a checkpoint file");
  }
  const std::uint64_t size = get_u64(is);
  std::string text(size, '\0');
  is.read(text.data(), static_cast<std::streamsize>(size));
  if (!is) throw DataError("checkpoint: truncated header in " + path.string());
  try {
    return ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw DataError("checkpoint: bad header in " + path.string() + ": " + e.what());
  }
}

std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Returns a description of every structural difference between the file's
// block table and the live model, empty when compatible.
std::string block_mismatches(const StannModel& model, const ordered_json& blocks) {
  std::string issues;
  auto add = [&issues](const std::string& msg) {
    if (!issues.empty()) issues += "; ";
    issues += msg;
  };

  const auto& live = model.blocks();
  if (live.size() != blocks.size()) {
    add("file has " + std::to_string(blocks.size()) + " blocks, model has " +
        std::to_string(live.size()));
  }
  const std::size_t common = std::min(live.size(), blocks.size());
  for (std::size_t i = 0; i < common; ++i) {
    const Block& lb = live[i];
    const auto& fb = blocks.at(i);
    if (fb.at("id").get<std::string>() != lb.id) {
      add("block " + std::to_string(i) + " is '" + fb.at("id").get<std::string>() +
          "' in file, '" + lb.id + "' in model");
      continue;
    }
    auto check_group = [&](const char* key, const std::vector<ParamRef>& refs) {
      const auto& group = fb.at(key);
      if (group.size() != refs.size()) {
        add(lb.id + ": file lists " + std::to_string(group.size()) + " " + key);
        return;
      }
      for (std::size_t p = 0; p < refs.size(); ++p) {
        const auto shape = group.at(p).at("shape").get<std::vector<int>>();
        if (group.at(p).at("name").get<std::string>() != refs[p].name ||
            shape != refs[p].shape) {
          add(lb.id + "/" + refs[p].name + ": file shape " + shape_string(shape) +
              " vs model " + shape_string(refs[p].shape));
        }
      }
    };
    check_group("params", lb.params);
    check_group("buffers", lb.buffers);
  }
  return issues;
}

void fill_from_stream(StannModel& model, AdamState* optimizer, const ordered_json& header,
                      std::istream& is) {
  for (const auto& block : model.blocks()) {
    for (const auto& p : block.params) {
      for (long i = 0; i < p.size; ++i) {
        p.value[i] = static_cast<double>(get_f32(is, "checkpoint"));
      }
    }
    for (const auto& p : block.buffers) {
      for (long i = 0; i < p.size; ++i) {
        p.value[i] = static_cast<double>(get_f32(is, "checkpoint"));
      }
    }
  }
  for (const auto& b : header.at("blocks")) {
    model.set_trainable(b.at("id").get<std::string>(), b.at("trainable").get<bool>());
  }
  model.rng().restore_state(header.at("rng").get<std::string>());

  if (optimizer != nullptr) {
    *optimizer = AdamState{};
    if (!header.at("optimizer").is_null()) {
      const auto& oj = header.at("optimizer");
      optimizer->t = oj.at("t").get<long>();
      optimizer->hyper.lr = oj.at("lr").get<double>();
      optimizer->hyper.beta1 = oj.at("beta1").get<double>();
      optimizer->hyper.beta2 = oj.at("beta2").get<double>();
      optimizer->hyper.eps = oj.at("eps").get<double>();
      for (const auto& block : model.blocks()) {
        for (const auto& p : block.params) {
          AdamSlot& slot = optimizer->slot(block.id + "/" + p.name, p.size);
          for (long i = 0; i < p.size; ++i) {
            slot.m(i) = static_cast<double>(get_f32(is, "checkpoint"));
          }
          for (long i = 0; i < p.size; ++i) {
            slot.v(i) = static_cast<double>(get_f32(is, "checkpoint"));
          }
        }
      }
    }
  }
}

}  // namespace

void write_checkpoint(const StannModel& model, const AdamState* optimizer,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path.string());
  out << kCheckpointMagic;
  const std::string header = header_for(model, optimizer).dump(2);
  put_u64(out, header.size());
  out << header;

  for (const auto& block : model.blocks()) {
    for (const auto& p : block.params) {
      for (long i = 0; i < p.size; ++i) put_f32(out, static_cast<float>(p.value[i]));
    }
    for (const auto& p : block.buffers) {
      for (long i = 0; i < p.size; ++i) put_f32(out, static_cast<float>(p.value[i]));
    }
  }
  if (optimizer != nullptr) {
    for (const auto& block : model.blocks()) {
      for (const auto& p : block.params) {
        const auto it = optimizer->slots().find(block.id + "/" + p.name);
        for (long i = 0; i < p.size; ++i) {
          put_f32(out, it == optimizer->slots().end() || it->second.m.size() != p.size
                           ? 0.0f
                           : static_cast<float>(it->second.m(i)));
        }
        for (long i = 0; i < p.size; ++i) {
          put_f32(out, it == optimizer->slots().end() || it->second.v.size() != p.size
                           ? 0.0f
                           : static_cast<float>(it->second.v(i)));
        }
      }
    }
  }
}

StannModel read_checkpoint(const std::filesystem::path& path, AdamState* optimizer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  const ordered_json header = read_header(in, path);
  if (header.at("version").get<int>() != 1) {
    throw DataError("checkpoint: unsupported version in " + path.string());
  }
  StannModel model(config_from_json(header.at("config")), header.at("seed").get<std::uint64_t>());
  const std::string issues = block_mismatches(model, header.at("blocks"));
  if (!issues.empty()) throw DataError("checkpoint: corrupt block table: " + issues);
  fill_from_stream(model, optimizer, header, in);
  return model;
}

void read_checkpoint_into(StannModel& model, AdamState* optimizer,
                          const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  const ordered_json header = read_header(in, path);
  if (header.at("version").get<int>() != 1) {
    throw DataError("checkpoint: unsupported version in " + path.string());
  }
  const std::string issues = block_mismatches(model, header.at("blocks"));
  if (!issues.empty()) {
    throw DataError("checkpoint: incompatible with this model: " + issues);
  }
  fill_from_stream(model, optimizer, header, in);
}

std::string checkpoint_summary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  const ordered_json header = read_header(in, path);
  const StannConfig config = config_from_json(header.at("config"));

  std::ostringstream os;
  os << "checkpoint " << path.string() << "\n";
  os << "  version " << header.at("version").get<int>() << ", seed "
     << header.at("seed").get<std::uint64_t>() << "\n";
  os << "  model: " << config.n_channels << " channels x " << config.timesteps
     << " steps, recurrent width " << config.ran_hidden << ", fusion width "
     << config.dense_width << "\n";
  long total = 0, trainable = 0;
  os << "  blocks:\n";
  for (const auto& b : header.at("blocks")) {
    long count = 0;
    for (const auto& p : b.at("params")) {
      long size = 1;
      for (int d : p.at("shape").get<std::vector<int>>()) size *= d;
      count += size;
    }
    total += count;
    const bool t = b.at("trainable").get<bool>();
    if (t) trainable += count;
    os << "    " << std::left << std::setw(14) << b.at("id").get<std::string>()
       << (t ? "trainable" : "frozen   ") << std::right << std::setw(9) << count
       << " params\n";
  }
  os << "  total " << total << " params, " << trainable << " trainable\n";
  os << "  optimizer: "
     << (header.at("optimizer").is_null()
             ? std::string("none")
             : "adam after " + std::to_string(header.at("optimizer").at("t").get<long>()) +
                   " steps")
     << "\n";
  return os.str();
}

// ---------- figure data ----------

namespace {

std::string color_for(double t) {
  // Two-segment ramp: blue -> white -> red.
  const auto channel = [](double v) {
    const int c = static_cast<int>(std::lround(255.0 * std::min(1.0, std::max(0.0, v))));
    std::ostringstream os;
    os << std::hex << std::setw(2) << std::setfill('0') << c;
    return os.str();
  };
  double r, g, b;
  if (t < 0.5) {
    const double u = t * 2.0;
    r = 0.13 + u * 0.87;
    g = 0.40 + u * 0.60;
    b = 0.67 + u * 0.33;
  } else {
    const double u = (t - 0.5) * 2.0;
    r = 1.0 - u * 0.30;
    g = 1.0 - u * 0.90;
    b = 1.0 - u * 0.84;
  }
  return "#" + channel(r) + channel(g) + channel(b);
}

}  // namespace

std::string render_topomap_svg(const Montage& montage, const Eigen::VectorXd& values) {
  if (values.size() != montage.size()) {
    throw ArgumentError("topomap: got " + std::to_string(values.size()) + " values for " +
                        std::to_string(montage.size()) + " sensors");
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values(i))) throw ArgumentError("topomap: non-finite value");
  }

  const double vmin = values.minCoeff();
  const double vmax = values.maxCoeff();
  const double span = vmax - vmin;

  const double cx = 200.0, cy = 200.0, head_r = 150.0;
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" "
        "viewBox=\"0 0 400 400\">\n";
  os << "  <ellipse cx=\"" << cx - head_r << "\" cy=\"" << cy
     << "\" rx=\"12\" ry=\"28\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  os << "  <ellipse cx=\"" << cx + head_r << "\" cy=\"" << cy
     << "\" rx=\"12\" ry=\"28\" fill=\"none\" stroke=\"black\" stroke-width=\"2\"/>\n";
  os << "  <polygon points=\"" << cx - 14 << "," << cy - head_r + 2 << " " << cx << ","
     << cy - head_r - 22 << " " << cx + 14 << "," << cy - head_r + 2
     << "\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"/>\n";
  os << "  <circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << head_r
     << "\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"/>\n";

  const double pi = 3.14159265358979323846;
  for (int i = 0; i < montage.size(); ++i) {
    const Sensor& s = montage.sensor(i);
    const double r3 = std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z);
    double px = cx, py = cy;
    const double planar = std::hypot(s.x, s.y);
    if (r3 > 0.0 && planar > 0.0) {
      // Azimuthal projection: polar angle maps to radius, equator on the rim.
      const double u = std::acos(std::min(1.0, std::max(-1.0, s.z / r3))) / (pi / 2.0);
      px = cx + head_r * u * (s.x / planar);
      py = cy - head_r * u * (s.y / planar);
    }
    const double t = span > 0.0 ? (values(i) - vmin) / span : 0.5;
    os << "  <circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"14\" fill=\"" << color_for(t)
       << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    os << "  <text x=\"" << px << "\" y=\"" << py + 26
       << "\" font-size=\"10\" text-anchor=\"middle\" font-family=\"sans-serif\">" << s.label
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void emit_topomap(const Montage& montage, const Eigen::VectorXd& values,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("topomap: cannot write " + path.string());
  out << render_topomap_svg(montage, values);
}

Eigen::VectorXd extract_kernel_map(StannModel& model,
                                   const std::vector<LabeledWindow>& windows, int column,
                                   int kernel) {
  if (windows.empty()) throw ArgumentError("kernel map: no windows");
  if (column < 0 || column > 2) throw ArgumentError("kernel map: column must be 0, 1 or 2");
  const int filters =
      model.config().columns[static_cast<std::size_t>(column)].stages[2].filters;
  if (kernel < 0 || kernel >= filters) {
    throw ArgumentError("kernel map: kernel index must be below " + std::to_string(filters));
  }

  const int n = model.config().n_channels;
  const int pooled = model.config().pooled_height();
  Eigen::VectorXd pooled_mean = Eigen::VectorXd::Zero(pooled);
  long count = 0;

  const int chunk = 64;
  for (std::size_t start = 0; start < windows.size(); start += chunk) {
    const std::size_t stop = std::min(windows.size(), start + chunk);
    std::vector<int> indices;
    for (std::size_t i = start; i < stop; ++i) indices.push_back(static_cast<int>(i));
    const ModelBatch batch = make_batch(windows, indices);
    const Tensor4 act = model.column_activation(batch.in1, column);
    for (int b = 0; b < act.dim0(); ++b) {
      for (int i = 0; i < act.dim1(); ++i) {
        for (int j = 0; j < act.dim2(); ++j) pooled_mean(i) += act(b, i, j, kernel);
      }
    }
    count += static_cast<long>(act.dim0()) * act.dim2();
  }
  pooled_mean /= static_cast<double>(count);

  // Expand pooled rows back onto sensors (each pooled row covers n/pooled
  // consecutive channels), then normalize to [0, 1].
  Eigen::VectorXd per_sensor(n);
  for (int i = 0; i < n; ++i) {
    per_sensor(i) = pooled_mean(std::min(pooled - 1, i * pooled / n));
  }
  const double lo = per_sensor.minCoeff();
  const double hi = per_sensor.maxCoeff();
  if (hi - lo > 0.0) {
    per_sensor = (per_sensor.array() - lo) / (hi - lo);
  } else {
    per_sensor.setConstant(0.5);
  }
  return per_sensor;
}

void export_embeddings(StannModel& model, const std::vector<LabeledWindow>& windows,
                       const std::filesystem::path& path) {
  if (windows.empty()) throw ArgumentError("embeddings: no windows");
  std::ofstream out(path);
  if (!out) throw DataError("embeddings: cannot write " + path.string());

  out << "label";
  for (int d = 0; d < model.config().dense_width; ++d) out << ",e" << d;
  out << "\n";
  out << std::setprecision(9);

  const int chunk = 64;
  for (std::size_t start = 0; start < windows.size(); start += chunk) {
    const std::size_t stop = std::min(windows.size(), start + chunk);
    std::vector<int> indices;
    for (std::size_t i = start; i < stop; ++i) indices.push_back(static_cast<int>(i));
    const Eigen::MatrixXd emb = model.embeddings(make_batch(windows, indices));
    for (Eigen::Index c = 0; c < emb.cols(); ++c) {
      out << windows[start + static_cast<std::size_t>(c)].label;
      for (Eigen::Index r = 0; r < emb.rows(); ++r) out << "," << emb(r, c);
      out << "\n";
    }
  }
}

// ---------- results ----------

void write_fold_csv(const FitResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("results: cannot write " + path.string());
  out << "fold,accuracy,f1\n";
  out << std::fixed << std::setprecision(6);
  int row = 0;
  for (const auto& fm : result.folds) {
    out << row++ << "," << fm.metrics.accuracy << "," << fm.metrics.f1 << "\n";
  }
}

void write_summary_json(const FitResult& result, const std::string& provenance_json,
                        const std::filesystem::path& path) {
  ordered_json j;
  j["mean_accuracy"] = result.mean_accuracy;
  j["sd_accuracy"] = result.sd_accuracy;
  j["mean_f1"] = result.mean_f1;
  j["sd_f1"] = result.sd_f1;
  j["n_folds"] = result.folds.size();
  try {
    j["config"] = provenance_json.empty() ? ordered_json::object()
                                          : ordered_json::parse(provenance_json);
  } catch (const std::exception& e) {
    throw ArgumentError(std::string("results: bad provenance json: ") + e.what());
  }
  std::ofstream out(path);
  if (!out) throw DataError("results: cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void write_tl_csv(const std::vector<TlReportRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("results: cannot write " + path.string());
  out << "scheme,budget,seed,accuracy,f1\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.scheme << "," << r.budget << "," << r.seed << "," << r.accuracy << "," << r.f1
        << "\n";
  }
}

}  // namespace stann
