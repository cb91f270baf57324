#include "gazequiz/store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "gazequiz/error.hpp"
#include "gazequiz/rng.hpp"

namespace gazequiz {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool safe_component(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
  });
}

void require_safe(const std::string& s, const char* what) {
  if (!safe_component(s)) throw Error(ErrorCode::ValidationError, std::string(what) + " '" + s + "' is not a safe file name");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::StorageError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::StorageError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw Error(ErrorCode::StorageError, "cannot rename " + tmp.string() + ": " + ec.message());
}

/// Complete lines of a JSONL file. An unterminated tail is the remains of
/// an interrupted append: it is dropped and cut from the file.
std::vector<std::string> read_lines_repair(const fs::path& p) {
  std::vector<std::string> lines;
  if (!fs::exists(p)) return lines;
  const std::string text = read_file(p);
  const auto last_nl = text.find_last_of('\n');
  const std::size_t complete = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (complete != text.size()) {
    std::error_code ec;
    fs::resize_file(p, complete, ec);
    if (ec) throw Error(ErrorCode::StorageError, "cannot repair " + p.string() + ": " + ec.message());
  }
  std::size_t start = 0;
  while (start < complete) {
    const auto nl = text.find('\n', start);
    if (nl > start) lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

void append_line(const fs::path& p, const std::string& line) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  out << line << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::StorageError, "append to " + p.string() + " failed");
}

nlohmann::json parse_line(const std::string& line, const fs::path& file, std::size_t index) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::StorageError, file.string() + " line " + std::to_string(index + 1) + ": " + e.what());
  }
}

nlohmann::ordered_json normalization_json(const NormalizationParams& n) {
  nlohmann::ordered_json j;
  j["focal_norm"] = n.focal_norm;
  j["distance_norm"] = n.distance_norm;
  j["size_norm"] = n.size_norm;
  return j;
}

NormalizationParams normalization_from_json(const nlohmann::json& j) {
  NormalizationParams n;
  n.focal_norm = j.at("focal_norm").get<double>();
  n.distance_norm = j.at("distance_norm").get<double>();
  n.size_norm = j.at("size_norm").get<int>();
  n.validate();
  return n;
}

nlohmann::ordered_json participant_json(const Participant& p) {
  nlohmann::ordered_json j;
  j["participant_id"] = p.participant_id;
  j["wearing_eyetracker"] = p.wearing_eyetracker;
  j["exclude_from_dataset"] = p.exclude_from_dataset;
  return j;
}

Participant participant_from_json(const nlohmann::json& j) {
  return {j.at("participant_id").get<std::string>(), j.at("wearing_eyetracker").get<bool>(),
          j.value("exclude_from_dataset", false)};
}

nlohmann::json vec3_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ValidationError, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string now_iso8601() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

nlohmann::ordered_json sample_to_json(const GazeSample& s) {
  nlohmann::ordered_json j;
  j["sample_id"] = s.sample_id;
  j["session_id"] = s.session_id;
  j["participant_id"] = s.participant_id;
  j["mode"] = s.mode;
  if (s.letter_id) j["letter_id"] = *s.letter_id;
  if (s.stimulus_xy_mm) j["stimulus_xy_mm"] = {s.stimulus_xy_mm->x, s.stimulus_xy_mm->y};
  j["label_pitch_rad"] = s.label_pitch_rad;
  j["label_yaw_rad"] = s.label_yaw_rad;
  j["label_vec_xyz"] = vec3_json(s.label_vec);
  j["wearing_eyetracker"] = s.wearing_eyetracker;
  j["image_ref"] = s.image_ref;
  j["normalized_image_ref"] = s.normalized_image_ref;
  j["captured_at_ms"] = s.captured_at_ms;
  j["camera_side"] = to_string(s.camera_side);
  if (s.estimator_vec) j["estimator_vec_xyz"] = vec3_json(*s.estimator_vec);
  if (s.eyetracker_ref) j["eyetracker_ref"] = *s.eyetracker_ref;
  return j;
}

GazeSample sample_from_json(const nlohmann::json& j) {
  try {
    GazeSample s;
    s.sample_id = j.at("sample_id").get<std::string>();
    s.session_id = j.at("session_id").get<std::string>();
    s.participant_id = j.at("participant_id").get<std::string>();
    s.mode = j.at("mode").get<std::string>();
    if (j.contains("letter_id")) s.letter_id = j["letter_id"].get<std::string>();
    if (j.contains("stimulus_xy_mm")) {
      const auto& p = j["stimulus_xy_mm"];
      s.stimulus_xy_mm = Point2{p.at(0).get<double>(), p.at(1).get<double>()};
    }
    s.label_pitch_rad = j.at("label_pitch_rad").get<double>();
    s.label_yaw_rad = j.at("label_yaw_rad").get<double>();
    s.label_vec = vec3_from_json(j.at("label_vec_xyz"));
    s.wearing_eyetracker = j.at("wearing_eyetracker").get<bool>();
    s.image_ref = j.at("image_ref").get<std::string>();
    s.normalized_image_ref = j.at("normalized_image_ref").get<std::string>();
    s.captured_at_ms = j.at("captured_at_ms").get<std::int64_t>();
    s.camera_side = side_from_string(j.value("camera_side", "A"));
    if (j.contains("estimator_vec_xyz")) s.estimator_vec = vec3_from_json(j["estimator_vec_xyz"]);
    if (j.contains("eyetracker_ref")) s.eyetracker_ref = j["eyetracker_ref"].get<std::string>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("sample record: ") + e.what());
  }
}

struct SessionStore::State {
  fs::path root;
  std::optional<BoardLayout> layout;
  NormalizationParams normalization;
  std::uint64_t salt = 0;

  mutable std::mutex mu;
  std::vector<Participant> participants;
  std::map<std::string, std::size_t> participant_index;
  std::vector<SessionInfo> sessions;
  std::map<std::string, std::size_t> session_index;
  std::vector<GazeSample> samples;
  std::set<std::string> sample_ids;

  fs::path session_dir(const std::string& id) const { return root / "sessions" / id; }

  void load() {
    for (const auto& line : read_lines_repair(root / "participants.jsonl")) {
      Participant p = participant_from_json(parse_line(line, root / "participants.jsonl", participants.size()));
      if (participant_index.count(p.participant_id) == 0) {
        participant_index[p.participant_id] = participants.size();
        participants.push_back(std::move(p));
      }
    }
    std::size_t n = 0;
    for (const auto& line : read_lines_repair(root / "index.jsonl")) {
      const auto j = parse_line(line, root / "index.jsonl", n++);
      const std::string id = j.at("session_id").get<std::string>();
      if (j.contains("mode")) {
        SessionInfo info;
        info.session_id = id;
        info.mode = j["mode"].get<std::string>();
        info.participants = j.at("participants").get<std::vector<std::string>>();
        info.status = j.value("status", "open");
        session_index[id] = sessions.size();
        sessions.push_back(std::move(info));
      } else if (auto it = session_index.find(id); it != session_index.end()) {
        sessions[it->second].status = j.at("status").get<std::string>();
      }
    }
    for (const auto& info : sessions) {
      const fs::path dir = session_dir(info.session_id);
      read_lines_repair(dir / "events.jsonl");
      std::size_t i = 0;
      for (const auto& line : read_lines_repair(dir / "samples.jsonl")) {
        GazeSample s = sample_from_json(parse_line(line, dir / "samples.jsonl", i++));
        if (sample_ids.insert(s.sample_id).second) samples.push_back(std::move(s));
      }
    }
  }
};

SessionStore::SessionStore(std::unique_ptr<State> state) : state_(std::move(state)) {}
SessionStore::SessionStore(SessionStore&&) noexcept = default;
SessionStore& SessionStore::operator=(SessionStore&&) noexcept = default;
SessionStore::~SessionStore() = default;

SessionStore SessionStore::create(const fs::path& root, const BoardLayout& layout, const NormalizationParams& normalization) {
  normalization.validate();
  if (fs::exists(root / "store.json")) {
    SessionStore existing = open(root);
    if (existing.layout().content_hash() != layout.content_hash()) {
      throw Error(ErrorCode::StorageError, root.string() + " holds a store for a different board layout");
    }
    return existing;
  }
  std::error_code ec;
  fs::create_directories(root / "sessions", ec);
  if (ec) throw Error(ErrorCode::StorageError, "cannot create " + root.string() + ": " + ec.message());

  auto state = std::make_unique<State>();
  state->root = root;
  state->layout = layout;
  state->normalization = normalization;
  std::random_device rd;
  state->salt = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();

  write_file_atomic(root / "board_layout.txt", format_layout(layout));
  nlohmann::ordered_json meta;
  meta["schema_version"] = kStoreSchemaVersion;
  meta["board_layout_hash"] = hex64(layout.content_hash());
  meta["normalization"] = normalization_json(normalization);
  meta["token_salt"] = hex64(state->salt);
  write_file_atomic(root / "store.json", meta.dump(2) + "\n");
  return SessionStore(std::move(state));
}

SessionStore SessionStore::open(const fs::path& root) {
  if (!fs::exists(root / "store.json")) throw Error(ErrorCode::StorageError, root.string() + " is not a session store");
  auto state = std::make_unique<State>();
  state->root = root;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(root / "store.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::StorageError, "store.json: " + std::string(e.what()));
  }
  if (meta.value("schema_version", 0) != kStoreSchemaVersion) {
    throw Error(ErrorCode::StorageError, "unsupported store schema version");
  }
  state->layout = parse_layout(read_file(root / "board_layout.txt"));
  if (hex64(state->layout->content_hash()) != meta.at("board_layout_hash").get<std::string>()) {
    throw Error(ErrorCode::StorageError, "board_layout.txt does not match the recorded hash");
  }
  state->normalization = normalization_from_json(meta.at("normalization"));
  state->salt = std::stoull(meta.at("token_salt").get<std::string>(), nullptr, 16);
  state->load();
  return SessionStore(std::move(state));
}

const fs::path& SessionStore::root() const { return state_->root; }
const BoardLayout& SessionStore::layout() const { return *state_->layout; }
const NormalizationParams& SessionStore::normalization() const { return state_->normalization; }

Participant SessionStore::register_participant(bool wearing_eyetracker, bool exclude_from_dataset) {
  Participant p;
  {
    std::lock_guard lock(state_->mu);
    std::uint64_t n = state_->participants.size();
    do {
      p.participant_id = "p-" + hex64(derive_seed(state_->salt, "participant", n++)).substr(0, 12);
    } while (state_->participant_index.count(p.participant_id) != 0);
  }
  p.wearing_eyetracker = wearing_eyetracker;
  p.exclude_from_dataset = exclude_from_dataset;
  add_participant(p);
  return p;
}

void SessionStore::add_participant(const Participant& p) {
  require_safe(p.participant_id, "participant id");
  std::lock_guard lock(state_->mu);
  if (auto it = state_->participant_index.find(p.participant_id); it != state_->participant_index.end()) {
    if (state_->participants[it->second] == p) return;
    throw Error(ErrorCode::ValidationError, "participant " + p.participant_id + " already registered with other flags");
  }
  append_line(root() / "participants.jsonl", participant_json(p).dump());
  state_->participant_index[p.participant_id] = state_->participants.size();
  state_->participants.push_back(p);
}

std::optional<Participant> SessionStore::participant(const std::string& id) const {
  std::lock_guard lock(state_->mu);
  auto it = state_->participant_index.find(id);
  if (it == state_->participant_index.end()) return std::nullopt;
  return state_->participants[it->second];
}

std::vector<Participant> SessionStore::participants() const {
  std::lock_guard lock(state_->mu);
  return state_->participants;
}

void SessionStore::open_session(const SessionInfo& info) {
  require_safe(info.session_id, "session id");
  std::lock_guard lock(state_->mu);
  if (state_->session_index.count(info.session_id) != 0) {
    throw Error(ErrorCode::ValidationError, "session " + info.session_id + " already exists");
  }
  std::error_code ec;
  fs::create_directories(state_->session_dir(info.session_id) / "images", ec);
  if (ec) throw Error(ErrorCode::StorageError, "cannot create session directory: " + ec.message());
  nlohmann::ordered_json j;
  j["session_id"] = info.session_id;
  j["mode"] = info.mode;
  j["participants"] = info.participants;
  j["status"] = info.status;
  append_line(root() / "index.jsonl", j.dump());
  state_->session_index[info.session_id] = state_->sessions.size();
  state_->sessions.push_back(info);
}

void SessionStore::set_session_status(const std::string& session_id, const std::string& status) {
  std::lock_guard lock(state_->mu);
  auto it = state_->session_index.find(session_id);
  if (it == state_->session_index.end()) throw Error(ErrorCode::NotFound, "unknown session " + session_id);
  nlohmann::ordered_json j;
  j["session_id"] = session_id;
  j["status"] = status;
  append_line(root() / "index.jsonl", j.dump());
  state_->sessions[it->second].status = status;
}

std::vector<SessionInfo> SessionStore::sessions() const {
  std::lock_guard lock(state_->mu);
  return state_->sessions;
}

std::optional<SessionInfo> SessionStore::session(const std::string& session_id) const {
  std::lock_guard lock(state_->mu);
  auto it = state_->session_index.find(session_id);
  if (it == state_->session_index.end()) return std::nullopt;
  return state_->sessions[it->second];
}

void SessionStore::append_event(const std::string& session_id, const SessionEvent& event) {
  if (!session(session_id)) throw Error(ErrorCode::NotFound, "unknown session " + session_id);
  validate_payload(event.kind, event.payload);
  append_line(state_->session_dir(session_id) / "events.jsonl", to_line(event));
}

std::vector<SessionEvent> SessionStore::events(const std::string& session_id) const {
  if (!session(session_id)) throw Error(ErrorCode::NotFound, "unknown session " + session_id);
  const fs::path p = state_->session_dir(session_id) / "events.jsonl";
  if (!fs::exists(p)) return {};
  std::ifstream in(p, std::ios::binary);
  return read_event_log(in);
}

std::string SessionStore::write_image(const std::string& session_id, const std::string& name, const GrayImage& image) {
  require_safe(name, "image name");
  if (!session(session_id)) throw Error(ErrorCode::NotFound, "unknown session " + session_id);
  const std::string ref = "sessions/" + session_id + "/images/" + name + ".pgm";
  try {
    write_pgm(resolve(ref), image);
  } catch (const Error& e) {
    throw Error(ErrorCode::StorageError, e.what());
  }
  return ref;
}

bool SessionStore::append_sample(const GazeSample& s) {
  require_safe(s.sample_id, "sample id");
  if (s.letter_id.has_value() == s.stimulus_xy_mm.has_value()) {
    throw Error(ErrorCode::ValidationError, "sample " + s.sample_id + " needs exactly one of letter_id and stimulus_xy_mm");
  }
  if ((s.mode == "gamified") != s.letter_id.has_value() || (s.mode != "gamified" && s.mode != "standard")) {
    throw Error(ErrorCode::ValidationError, "sample " + s.sample_id + " target does not match mode '" + s.mode + "'");
  }
  if (!s.label_vec.allFinite() || std::abs(s.label_vec.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::ValidationError, "sample " + s.sample_id + " label is not a unit vector");
  }
  if (s.letter_id && !layout().cells().empty()) letter_position(layout(), *s.letter_id);
  for (const auto* ref : {&s.image_ref, &s.normalized_image_ref}) {
    if (ref->empty() || !fs::is_regular_file(resolve(*ref))) {
      throw Error(ErrorCode::ValidationError, "sample " + s.sample_id + " references missing image '" + *ref + "'");
    }
  }
  if (!participant(s.participant_id)) {
    throw Error(ErrorCode::ValidationError, "sample " + s.sample_id + " names unknown participant " + s.participant_id);
  }
  if (!session(s.session_id)) throw Error(ErrorCode::ValidationError, "sample " + s.sample_id + " names unknown session");

  std::lock_guard lock(state_->mu);
  if (state_->sample_ids.count(s.sample_id) != 0) return false;
  append_line(state_->session_dir(s.session_id) / "samples.jsonl", sample_to_json(s).dump());
  state_->sample_ids.insert(s.sample_id);
  state_->samples.push_back(s);
  return true;
}

std::vector<GazeSample> SessionStore::samples() const {
  std::lock_guard lock(state_->mu);
  return state_->samples;
}

std::size_t SessionStore::sample_count() const {
  std::lock_guard lock(state_->mu);
  return state_->samples.size();
}

std::string_view to_string(ExportFilter f) {
  switch (f) {
    case ExportFilter::training: return "training";
    case ExportFilter::eyetracker: return "eyetracker";
    case ExportFilter::all: return "all";
  }
  return "unknown";
}

ExportFilter export_filter_from_string(std::string_view s) {
  if (s == "training" || s == "default") return ExportFilter::training;
  if (s == "eyetracker") return ExportFilter::eyetracker;
  if (s == "all") return ExportFilter::all;
  throw Error(ErrorCode::ConfigError, "unknown export filter '" + std::string(s) + "'");
}

bool passes_filter(const GazeSample& s, const Participant& p, ExportFilter f) {
  if (p.exclude_from_dataset) return false;
  const bool wearer = s.wearing_eyetracker || p.wearing_eyetracker;
  switch (f) {
    case ExportFilter::training: return !wearer;
    case ExportFilter::eyetracker: return wearer;
    case ExportFilter::all: return true;
  }
  return false;
}

ExportResult export_dataset(const SessionStore& store, const fs::path& out_dir, const ExportOptions& options) {
  std::vector<GazeSample> selected;
  std::map<std::string, Participant> used;
  for (const auto& s : store.samples()) {
    const auto p = store.participant(s.participant_id);
    if (!p) throw Error(ErrorCode::ValidationError, "sample " + s.sample_id + " names unknown participant");
    if (!passes_filter(s, *p, options.filter)) continue;
    selected.push_back(s);
    used.emplace(p->participant_id, *p);
  }
  if (selected.empty()) throw Error(ErrorCode::EmptyExport, "no sample passes the '" + std::string(to_string(options.filter)) + "' filter");
  std::sort(selected.begin(), selected.end(), [](const GazeSample& a, const GazeSample& b) { return a.sample_id < b.sample_id; });

  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw Error(ErrorCode::StorageError, "cannot create " + out_dir.string() + ": " + ec.message());

  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (auto s : selected) {
    const std::string img = "images/" + s.sample_id + ".pgm";
    const std::string norm = "images/" + s.sample_id + "_norm.pgm";
    fs::copy_file(store.resolve(s.image_ref), out_dir / img, fs::copy_options::overwrite_existing, ec);
    if (!ec) fs::copy_file(store.resolve(s.normalized_image_ref), out_dir / norm, fs::copy_options::overwrite_existing, ec);
    if (ec) throw Error(ErrorCode::StorageError, "copying images of " + s.sample_id + ": " + ec.message());
    s.image_ref = img;
    s.normalized_image_ref = norm;
    records.push_back(sample_to_json(s));
  }
  nlohmann::ordered_json participants = nlohmann::ordered_json::array();
  for (const auto& [id, p] : used) participants.push_back(participant_json(p));

  ExportResult result;
  auto& m = result.manifest;
  m["schema_version"] = kManifestSchemaVersion;
  m["dataset_id"] = options.dataset_id;
  m["created_at"] = options.created_at.empty() ? now_iso8601() : options.created_at;
  m["filter"] = to_string(options.filter);
  m["board_layout_hash"] = hex64(store.layout().content_hash());
  m["board_layout_ref"] = "board_layout.txt";
  m["normalization"] = normalization_json(store.normalization());
  m["counts"] = {{"samples", selected.size()}, {"participants", used.size()}};
  m["participants"] = std::move(participants);
  m["samples"] = std::move(records);

  write_file_atomic(out_dir / "board_layout.txt", format_layout(store.layout()));
  result.manifest_path = out_dir / "manifest.json";
  write_file_atomic(result.manifest_path, m.dump(2) + "\n");
  result.records = selected.size();
  return result;
}

SessionStore import_dataset(const fs::path& export_dir, const fs::path& store_root) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(export_dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ValidationError, std::string("manifest.json: ") + e.what());
  }
  if (m.value("schema_version", 0) != kManifestSchemaVersion) throw Error(ErrorCode::ValidationError, "unsupported manifest schema");
  const BoardLayout layout = parse_layout(read_file(export_dir / m.value("board_layout_ref", "board_layout.txt")));
  if (hex64(layout.content_hash()) != m.at("board_layout_hash").get<std::string>()) {
    throw Error(ErrorCode::ValidationError, "exported board layout does not match its hash");
  }
  SessionStore store = SessionStore::create(store_root, layout, normalization_from_json(m.at("normalization")));
  for (const auto& pj : m.at("participants")) store.add_participant(participant_from_json(pj));

  std::vector<GazeSample> samples;
  std::map<std::string, SessionInfo> sessions;
  for (const auto& rj : m.at("samples")) {
    GazeSample s = sample_from_json(rj);
    auto& info = sessions[s.session_id];
    info.session_id = s.session_id;
    info.mode = s.mode;
    info.status = "imported";
    if (std::find(info.participants.begin(), info.participants.end(), s.participant_id) == info.participants.end()) {
      info.participants.push_back(s.participant_id);
    }
    samples.push_back(std::move(s));
  }
  for (const auto& [id, info] : sessions) {
    if (!store.session(id)) store.open_session(info);
  }
  for (auto& s : samples) {
    const GrayImage img = read_pgm(export_dir / s.image_ref);
    const GrayImage norm = read_pgm(export_dir / s.normalized_image_ref);
    s.image_ref = store.write_image(s.session_id, s.sample_id, img);
    s.normalized_image_ref = store.write_image(s.session_id, s.sample_id + "_norm", norm);
    store.append_sample(s);
  }
  return store;
}

std::vector<int> FoldSplit::fold_sizes() const {
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (const auto& [id, f] : assignment) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

std::vector<int> FoldSplit::eyetracker_counts(const std::vector<Participant>& participants) const {
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (const auto& p : participants) {
    auto it = assignment.find(p.participant_id);
    if (p.wearing_eyetracker && it != assignment.end()) ++counts[static_cast<std::size_t>(it->second)];
  }
  return counts;
}

FoldSplit make_fold_split(const std::vector<Participant>& participants, int k, std::uint64_t seed,
                          const std::vector<GazeSample>& pool, std::size_t draw_size) {
  if (k < 1) throw Error(ErrorCode::ConfigError, "fold count must be positive");
  if (static_cast<std::size_t>(k) > participants.size()) {
    throw Error(ErrorCode::InsufficientParticipants,
                std::to_string(k) + " folds need at least as many participants, got " + std::to_string(participants.size()));
  }
  std::vector<Participant> wearers;
  std::vector<Participant> others;
  for (const auto& p : participants) (p.wearing_eyetracker ? wearers : others).push_back(p);
  const auto by_id = [](const Participant& a, const Participant& b) { return a.participant_id < b.participant_id; };
  std::sort(wearers.begin(), wearers.end(), by_id);
  std::sort(others.begin(), others.end(), by_id);
  Rng rng(derive_seed(seed, "folds"));
  rng.shuffle(wearers.begin(), wearers.end());
  rng.shuffle(others.begin(), others.end());

  FoldSplit split;
  split.k = k;
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < wearers.size(); ++i) {
    const int f = static_cast<int>(i % static_cast<std::size_t>(k));
    split.assignment[wearers[i].participant_id] = f;
    ++sizes[static_cast<std::size_t>(f)];
  }
  for (const auto& p : others) {
    const auto f = static_cast<int>(std::min_element(sizes.begin(), sizes.end()) - sizes.begin());
    split.assignment[p.participant_id] = f;
    ++sizes[static_cast<std::size_t>(f)];
  }

  std::vector<const GazeSample*> sorted_pool;
  for (const auto& s : pool) sorted_pool.push_back(&s);
  std::sort(sorted_pool.begin(), sorted_pool.end(), [](const GazeSample* a, const GazeSample* b) { return a->sample_id < b->sample_id; });
  split.fine_tune_samples.resize(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    std::vector<std::string> candidates;
    for (const auto* s : sorted_pool) {
      auto it = split.assignment.find(s->participant_id);
      if (it != split.assignment.end() && it->second != f) candidates.push_back(s->sample_id);
    }
    Rng draw(derive_seed(seed, "fine_tune", static_cast<std::uint64_t>(f)));
    draw.shuffle(candidates.begin(), candidates.end());
    if (candidates.size() > draw_size) candidates.resize(draw_size);
    std::sort(candidates.begin(), candidates.end());
    split.fine_tune_samples[static_cast<std::size_t>(f)] = std::move(candidates);
  }
  return split;
}

nlohmann::ordered_json fold_split_to_json(const FoldSplit& split) {
  nlohmann::ordered_json j;
  j["k"] = split.k;
  nlohmann::ordered_json assignment = nlohmann::ordered_json::object();
  for (const auto& [id, f] : split.assignment) assignment[id] = f;
  j["assignment"] = std::move(assignment);
  j["fine_tune_samples"] = split.fine_tune_samples;
  return j;
}

}  // namespace gazequiz
