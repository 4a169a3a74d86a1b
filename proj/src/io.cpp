#include "lsbo/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

namespace lsbo {
namespace {

using json = nlohmann::json;

constexpr char kVaeMagic[8] = {'L', 'S', 'B', 'O', 'V', 'A', 'E', '\0'};
constexpr char kStateMagic[8] = {'L', 'S', 'B', 'O', 'S', 'T', 'A', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fnv_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[std::size_t(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(char(v)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    buf_.append(s);
  }
  void doubles(std::span<const double> v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void u64s(std::span<const std::uint64_t> v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(std::uint64_t));
  }
  std::string take() { return std::move(buf_); }

 private:
  void raw(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& bytes, const char* what)
      : bytes_(bytes), what_(what) {}

  std::uint8_t u8() {
    need(1);
    return std::uint8_t(bytes_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    std::uint64_t n = u64();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    std::uint64_t n = u64();
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::vector<std::uint64_t> u64s() {
    std::uint64_t n = u64();
    need(n * sizeof(std::uint64_t));
    std::vector<std::uint64_t> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(std::uint64_t));
    pos_ += n * sizeof(std::uint64_t);
    return v;
  }
  void expect_magic(const char (&magic)[8]) {
    need(8);
    if (std::memcmp(bytes_.data() + pos_, magic, 8) != 0)
      throw std::runtime_error(std::string(what_) + ": bad magic");
    pos_ += 8;
  }
  void done() {
    if (pos_ != bytes_.size())
      throw std::runtime_error(std::string(what_) + ": trailing bytes");
  }

 private:
  void need(std::uint64_t n) {
    if (bytes_.size() - pos_ < n)
      throw std::runtime_error(std::string(what_) + ": truncated");
  }
  void raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
  const char* what_;
};

const char* kind_name(VarKind k) {
  switch (k) {
    case VarKind::categorical: return "categorical";
    case VarKind::discrete_integer: return "discrete-integer";
    default: return "discretized-continuous";
  }
}

void write_network(Writer& w, const Network& net) {
  w.u64(net.layers.size());
  for (const DenseLayer& l : net.layers) {
    w.u64(l.in);
    w.u64(l.out);
    w.u32(std::uint32_t(l.act));
    w.doubles(l.w);
    w.doubles(l.b);
  }
}

Network read_network(Reader& r, const char* what) {
  Network net;
  std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    DenseLayer l;
    l.in = std::size_t(r.u64());
    l.out = std::size_t(r.u64());
    std::uint32_t act = r.u32();
    if (act > 2) throw std::runtime_error(std::string(what) + ": bad activation");
    l.act = Activation(act);
    l.w = r.doubles();
    l.b = r.doubles();
    if (l.w.size() != l.in * l.out || l.b.size() != l.out)
      throw std::runtime_error(std::string(what) + ": layer shape mismatch");
    net.layers.push_back(std::move(l));
  }
  return net;
}

std::vector<std::string> space_headers(const DesignSpace& space) {
  std::vector<std::string> h;
  for (const VariableSpec& v : space.vars()) h.push_back(csv_field(v.name));
  return h;
}

void append_point_fields(std::string& out, const DesignSpace& space,
                         const DesignPoint& p) {
  for (std::size_t n = 0; n < space.num_vars(); ++n) {
    out += ',';
    out += csv_field(space.value(p, n).to_string());
  }
}

}  // namespace

std::string space_to_json(const DesignSpace& space) {
  json vars = json::array();
  for (const VariableSpec& v : space.vars()) {
    json levels = json::array();
    for (const LevelValue& l : v.levels) {
      if (l.is_number())
        levels.push_back(l.number());
      else
        levels.push_back(l.label());
    }
    vars.push_back({{"name", v.name}, {"kind", kind_name(v.kind)}, {"levels", levels}});
  }
  return json{{"variables", vars}}.dump();
}

std::string serialize_vae(const VaeModel& m) {
  Writer w;
  for (char c : kVaeMagic) w.u8(std::uint8_t(c));
  w.u32(kFormatVersion);
  w.str(space_to_json(m.space));
  w.u64(m.train_seed);
  w.u64(m.latent_dim);
  w.f64(m.beta);
  w.u64(m.emb.size());
  for (std::size_t n = 0; n < m.emb.size(); ++n) {
    w.u64(m.emb_dim[n]);
    w.doubles(m.emb[n]);
  }
  write_network(w, m.encoder);
  write_network(w, m.decoder);
  return w.take();
}

VaeModel deserialize_vae(const std::string& bytes) {
  const char* what = "model file";
  Reader r(bytes, what);
  r.expect_magic(kVaeMagic);
  if (r.u32() != kFormatVersion)
    throw std::runtime_error(std::string(what) + ": unsupported version");
  VaeModel m;
  m.space = DesignSpace::parse(r.str());
  m.train_seed = r.u64();
  m.latent_dim = std::size_t(r.u64());
  m.beta = r.f64();
  std::uint64_t nv = r.u64();
  if (nv != m.space.num_vars())
    throw std::runtime_error(std::string(what) + ": embedding count mismatch");
  for (std::uint64_t n = 0; n < nv; ++n) {
    std::size_t ed = std::size_t(r.u64());
    std::vector<double> table = r.doubles();
    if (table.size() != ed * m.space.var(n).levels.size())
      throw std::runtime_error(std::string(what) + ": embedding shape mismatch");
    m.emb_dim.push_back(ed);
    m.emb.push_back(std::move(table));
  }
  m.encoder = read_network(r, what);
  m.decoder = read_network(r, what);
  r.done();
  if (m.encoder.input_size() != m.embed_size() ||
      m.encoder.output_size() != 2 * m.latent_dim ||
      m.decoder.input_size() != m.latent_dim ||
      m.decoder.output_size() != m.logit_size())
    throw std::runtime_error(std::string(what) + ": network shape mismatch");
  return m;
}

void save_vae(const VaeModel& m, const std::string& path) {
  write_file(path, serialize_vae(m));
}

VaeModel load_vae(const std::string& path) {
  return deserialize_vae(read_file(path));
}

std::string serialize_state(const CampaignState& st, std::uint64_t model_fnv) {
  Writer w;
  for (char c : kStateMagic) w.u8(std::uint8_t(c));
  w.u32(kFormatVersion);
  w.u64(model_fnv);
  w.u32(std::uint32_t(st.cfg.arity));
  w.u64(st.cfg.init_count);
  w.u64(st.cfg.budget);
  w.u64(st.cfg.candidates);
  w.u64(st.cfg.seed);
  const VaeConfig& vc = st.cfg.vae;
  w.u64(vc.latent_dim);
  w.f64(vc.beta);
  w.u64(vc.epochs);
  w.u64(vc.batch);
  w.f64(vc.lr);
  w.u64(vc.seed);
  std::vector<std::uint64_t> enc(vc.encoder_hidden.begin(), vc.encoder_hidden.end());
  std::vector<std::uint64_t> dec(vc.decoder_hidden.begin(), vc.decoder_hidden.end());
  w.u64s(enc);
  w.u64s(dec);
  w.str(st.init_rng.state());
  w.str(st.cand_rng.state());
  w.u8(st.aborted ? 1 : 0);
  w.str(st.abort_reason);
  w.u64(st.records.size());
  for (const EvalRecord& rec : st.records) {
    w.u32(rec.iteration);
    w.u8(rec.has_acq ? 1 : 0);
    w.u8(rec.fallback ? 1 : 0);
    w.f64(rec.acq);
    w.u64(rec.wall_ms);
    std::vector<std::uint64_t> idx(rec.x.indices.begin(), rec.x.indices.end());
    w.u64s(idx);
    w.doubles(rec.z);
    w.doubles(rec.f);
  }
  w.u64(st.failures.size());
  for (const FailureRecord& f : st.failures) {
    w.u32(f.iteration);
    w.str(f.reason);
  }
  return w.take();
}

CampaignState deserialize_state(const std::string& bytes,
                                std::uint64_t* model_fnv_out) {
  const char* what = "state file";
  Reader r(bytes, what);
  r.expect_magic(kStateMagic);
  if (r.u32() != kFormatVersion)
    throw std::runtime_error(std::string(what) + ": unsupported version");
  std::uint64_t fnv = r.u64();
  if (model_fnv_out) *model_fnv_out = fnv;
  CampaignState st;
  st.cfg.arity = int(r.u32());
  st.cfg.init_count = std::size_t(r.u64());
  st.cfg.budget = std::size_t(r.u64());
  st.cfg.candidates = std::size_t(r.u64());
  st.cfg.seed = r.u64();
  st.cfg.vae.latent_dim = std::size_t(r.u64());
  st.cfg.vae.beta = r.f64();
  st.cfg.vae.epochs = std::size_t(r.u64());
  st.cfg.vae.batch = std::size_t(r.u64());
  st.cfg.vae.lr = r.f64();
  st.cfg.vae.seed = r.u64();
  auto enc = r.u64s();
  auto dec = r.u64s();
  st.cfg.vae.encoder_hidden.assign(enc.begin(), enc.end());
  st.cfg.vae.decoder_hidden.assign(dec.begin(), dec.end());
  st.init_rng.set_state(r.str());
  st.cand_rng.set_state(r.str());
  st.aborted = r.u8() != 0;
  st.abort_reason = r.str();
  std::uint64_t nr = r.u64();
  for (std::uint64_t i = 0; i < nr; ++i) {
    EvalRecord rec;
    rec.iteration = r.u32();
    rec.has_acq = r.u8() != 0;
    rec.fallback = r.u8() != 0;
    rec.acq = r.f64();
    rec.wall_ms = r.u64();
    auto idx = r.u64s();
    rec.x.indices.assign(idx.begin(), idx.end());
    rec.z = r.doubles();
    rec.f = r.doubles();
    if (rec.f.size() != std::size_t(st.cfg.arity))
      throw std::runtime_error(std::string(what) + ": record arity mismatch");
    st.records.push_back(std::move(rec));
  }
  std::uint64_t nf = r.u64();
  for (std::uint64_t i = 0; i < nf; ++i) {
    FailureRecord f;
    f.iteration = r.u32();
    f.reason = r.str();
    st.failures.push_back(std::move(f));
  }
  r.done();
  return st;
}

std::string history_csv(const DesignSpace& space, const CampaignState& st) {
  std::string out = "iteration";
  for (const std::string& h : space_headers(space)) {
    out += ',';
    out += h;
  }
  for (std::size_t j = 0; j < st.cfg.vae.latent_dim; ++j)
    out += ",z" + std::to_string(j);
  out += ",f1";
  if (st.cfg.arity == 2) out += ",f2";
  out += ",acq,fallback,wall_time_ms\n";
  for (const EvalRecord& rec : st.records) {
    out += std::to_string(rec.iteration);
    append_point_fields(out, space, rec.x);
    for (double z : rec.z) {
      out += ',';
      out += fmt_double(z);
    }
    for (double f : rec.f) {
      out += ',';
      out += fmt_double(f);
    }
    out += ',';
    if (rec.has_acq) out += fmt_double(rec.acq);
    out += rec.fallback ? ",1," : ",0,";
    out += std::to_string(rec.wall_ms);
    out += '\n';
  }
  return out;
}

std::string front_csv(const DesignSpace& space, const CampaignState& st) {
  std::string out = "record";
  for (const std::string& h : space_headers(space)) {
    out += ',';
    out += h;
  }
  out += ",f1";
  if (st.cfg.arity == 2) out += ",f2";
  out += '\n';
  if (st.records.empty()) return out;
  for (std::size_t idx : st.front_indices()) {
    const EvalRecord& rec = st.records[idx];
    out += std::to_string(idx);
    append_point_fields(out, space, rec.x);
    for (double f : rec.f) {
      out += ',';
      out += fmt_double(f);
    }
    out += '\n';
  }
  return out;
}

std::string training_csv(const TrainingReport& report) {
  std::string out = "epoch,loss_rec,loss_kl,loss_total\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const auto& row = report.epochs[e];
    out += std::to_string(e + 1);
    out += ',';
    out += fmt_double(row.loss_rec);
    out += ',';
    out += fmt_double(row.loss_kl);
    out += ',';
    out += fmt_double(row.loss_total);
    out += '\n';
  }
  return out;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "latent_dim,loss_rec,loss_kl,loss_total,reconstruction_rate\n";
  for (const SweepRow& r : rows) {
    out += std::to_string(r.latent_dim);
    out += ',';
    out += fmt_double(r.loss_rec);
    out += ',';
    out += fmt_double(r.loss_kl);
    out += ',';
    out += fmt_double(r.loss_total);
    out += ',';
    out += fmt_double(r.reconstruction_rate);
    out += '\n';
  }
  return out;
}

std::string latent_csv(const VaeModel& m) {
  if (m.space.cardinality() > 1000000)
    throw std::runtime_error("latent export: space larger than 1000000 points");
  std::string out = "flat";
  for (const std::string& h : space_headers(m.space)) {
    out += ',';
    out += h;
  }
  for (std::size_t j = 0; j < m.latent_dim; ++j) out += ",z" + std::to_string(j);
  out += '\n';
  for (std::uint64_t flat = 0; flat < m.space.cardinality(); ++flat) {
    DesignPoint p = m.space.point_from_flat(flat);
    out += std::to_string(flat);
    append_point_fields(out, m.space, p);
    for (double z : encode_mean(m, p)) {
      out += ',';
      out += fmt_double(z);
    }
    out += '\n';
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("cannot read " + path);
  return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  out.flush();
  if (!out) throw std::runtime_error("cannot write " + path);
}

void write_campaign_dir(const std::string& dir, const VaeModel& vae,
                        const CampaignState& st) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string model = serialize_vae(vae);
  std::string state = serialize_state(st, fnv1a64(model));
  std::string history = history_csv(vae.space, st);
  std::string front = front_csv(vae.space, st);
  write_file(dir + "/model.bin", model);
  write_file(dir + "/state.bin", state);
  write_file(dir + "/history.csv", history);
  write_file(dir + "/front.csv", front);
  nlohmann::json man;
  man["format_version"] = kFormatVersion;
  man["arity"] = st.cfg.arity;
  man["seed"] = st.cfg.seed;
  man["space_cardinality"] = vae.space.cardinality();
  man["evaluations"] = st.records.size();
  man["init_done"] = st.init_done();
  man["iterations_done"] = st.iterations_done();
  man["aborted"] = st.aborted;
  man["model_fnv"] = fnv_hex(fnv1a64(model));
  man["state_fnv"] = fnv_hex(fnv1a64(state));
  man["history_fnv"] = fnv_hex(fnv1a64(history));
  man["front_fnv"] = fnv_hex(fnv1a64(front));
  write_file(dir + "/manifest.json", man.dump(2) + "\n");
}

LoadedCampaign load_campaign_dir(const std::string& dir) {
  json man = json::parse(read_file(dir + "/manifest.json"), nullptr, false);
  if (man.is_discarded() || !man.is_object())
    throw std::runtime_error("campaign directory: manifest.json is not valid JSON");
  if (!man.contains("format_version") || man["format_version"] != kFormatVersion)
    throw std::runtime_error("campaign directory: unsupported manifest version");

  auto check = [&](const char* key, const std::string& bytes, const char* file) {
    if (!man.contains(key) || !man[key].is_string() ||
        man[key].get<std::string>() != fnv_hex(fnv1a64(bytes)))
      throw std::runtime_error(
          std::string("campaign directory: ") + file +
          " does not match the manifest fingerprint");
  };
  std::string model = read_file(dir + "/model.bin");
  std::string state = read_file(dir + "/state.bin");
  std::string history = read_file(dir + "/history.csv");
  std::string front = read_file(dir + "/front.csv");
  check("model_fnv", model, "model.bin");
  check("state_fnv", state, "state.bin");
  check("history_fnv", history, "history.csv");
  check("front_fnv", front, "front.csv");

  LoadedCampaign lc;
  lc.vae = deserialize_vae(model);
  std::uint64_t want_fnv = 0;
  lc.state = deserialize_state(state, &want_fnv);
  if (want_fnv != fnv1a64(model))
    throw std::runtime_error("campaign directory: state.bin was produced with a different model");
  if (history != history_csv(lc.vae.space, lc.state) ||
      front != front_csv(lc.vae.space, lc.state))
    throw std::runtime_error("campaign directory: CSV content disagrees with state.bin");
  return lc;
}

}  // namespace lsbo
