#include "treeloc/global_db.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <iterator>
#include <mutex>
#include <ostream>
#include <sstream>

#include "treeloc/errors.hpp"
#include "treeloc/scene_assembly.hpp"

namespace treeloc {

namespace {

constexpr char kMagic[4] = {'T', 'L', 'D', 'B'};
constexpr std::uint32_t kFlagCandidate = 1u;

double round_to_float(double v) {
  volatile float f = static_cast<float>(v);
  return f;
}

Vec3 round_to_float(const Vec3& v) { return {round_to_float(v.x()), round_to_float(v.y()), round_to_float(v.z())}; }

// Float-rounded canonical axis. Not renormalized afterwards, so the stored value
// is exactly what the binary format holds (unit length to about 1e-7).
Vec3 quantize_axis(const Vec3& axis) {
  if (round_to_float(axis) == axis && axis.z() > 0 && std::abs(axis.norm() - 1.0) < 1e-6) return axis;
  return round_to_float(canonicalize_axis(axis));
}

class Writer {
 public:
  explicit Writer(std::string& out) : out_(out) {}
  template <typename T>
  void put(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    const U bits = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }

 private:
  std::string& out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      bits |= static_cast<U>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::string_view view(std::size_t n) {
    need(n);
    std::string_view v(in_.data() + pos_, n);
    pos_ += n;
    return v;
  }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorCode::FormatError, "truncated tree database");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

TreeObservation quantize_for_storage(TreeObservation t) {
  t.axis = quantize_axis(t.axis);
  t.dbh = round_to_float(t.dbh);
  return t;
}

GlobalTreeDb::GlobalTreeDb(double merge_radius)
    : merge_radius_(merge_radius), grid_(merge_radius > 0 ? merge_radius : 1.0),
      mutex_(std::make_unique<std::shared_mutex>()) {
  if (!(merge_radius > 0)) throw Error(ErrorCode::ConfigError, "merge_radius must be positive");
}

GlobalTreeDb::GlobalTreeDb(const GlobalTreeDb& other) : grid_(1.0), mutex_(std::make_unique<std::shared_mutex>()) {
  std::shared_lock lock(*other.mutex_);
  merge_radius_ = other.merge_radius_;
  next_id_ = other.next_id_;
  trees_ = other.trees_;
  alive_ = other.alive_;
  grid_ = other.grid_;
}

GlobalTreeDb& GlobalTreeDb::operator=(const GlobalTreeDb& other) {
  if (this == &other) return *this;
  GlobalTreeDb copy(other);
  *this = std::move(copy);
  return *this;
}

GlobalTreeDb::GlobalTreeDb(GlobalTreeDb&&) noexcept = default;
GlobalTreeDb& GlobalTreeDb::operator=(GlobalTreeDb&&) noexcept = default;
GlobalTreeDb::~GlobalTreeDb() = default;

void GlobalTreeDb::merge_or_insert(const TreeObservation& tree, MergeReport& report) {
  auto nearest_match = [&](const Vec2& c, double dbh, int self) {
    int best = -1;
    double best_d2 = merge_radius_ * merge_radius_;
    for (int idx : grid_.radius(c, merge_radius_)) {
      if (idx == self || !alive_[idx]) continue;
      if (std::abs(trees_[idx].dbh - dbh) >= kDbhMergeGate) continue;
      const double d2 = (trees_[idx].center() - c).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = idx;
      }
    }
    return best;
  };
  auto fold = [&](TreeObservation& into, const TreeObservation& from) {
    const double wa = std::max<std::uint32_t>(into.obs_count, 1);
    const double wb = std::max<std::uint32_t>(from.obs_count, 1);
    into.position = (wa * into.position + wb * from.position) / (wa + wb);
    into.axis = canonicalize_axis(wa * canonicalize_axis(into.axis) + wb * canonicalize_axis(from.axis));
    into.dbh = (wa * into.dbh + wb * from.dbh) / (wa + wb);
    into.obs_count += from.obs_count;
    into.is_candidate = into.is_candidate && from.is_candidate;
    into = quantize_for_storage(into);
  };

  int slot = nearest_match(tree.center(), tree.dbh, -1);
  if (slot < 0) {
    TreeObservation t = quantize_for_storage(tree);
    t.id = next_id_++;
    trees_.push_back(t);
    alive_.push_back(1);
    grid_.insert(t.center());
    ++report.inserted;
    return;
  }
  fold(trees_[slot], tree);
  grid_.update(slot, trees_[slot].center());
  ++report.merged;

  // The averaged tree may now sit inside another tree's gate; fold those in too.
  for (int other = nearest_match(trees_[slot].center(), trees_[slot].dbh, slot); other >= 0;
       other = nearest_match(trees_[slot].center(), trees_[slot].dbh, slot)) {
    const int keep = std::min(slot, other), drop = std::max(slot, other);
    fold(trees_[keep], trees_[drop]);
    alive_[drop] = 0;
    grid_.remove(drop);
    grid_.update(keep, trees_[keep].center());
    slot = keep;
  }
}

MergeReport GlobalTreeDb::insert_session(const std::vector<SceneInventory>& scenes, const Pose& session_pose) {
  std::unique_lock lock(*mutex_);
  MergeReport report;
  for (const auto& scene : scenes) {
    const Pose to_world = session_pose.compose(scene.pose);
    for (const auto& t : scene.trees) merge_or_insert(transform_tree(to_world, t), report);
  }
  return report;
}

SceneInventory GlobalTreeDb::local_scene(const Vec2& center, double half_extent, int scene_index) const {
  std::shared_lock lock(*mutex_);
  SceneInventory scene;
  scene.index = scene_index;
  scene.pose = Pose::from_translation(Vec3(center.x(), center.y(), 0.0));
  const Vec2 h(half_extent, half_extent);
  for (int idx : grid_.box(center - h, center + h)) {
    if (!alive_[idx]) continue;
    TreeObservation t = trees_[idx];
    t.position.x() -= center.x();
    t.position.y() -= center.y();
    scene.trees.push_back(t);
  }
  return scene;
}

std::vector<TreeObservation> GlobalTreeDb::trees() const {
  std::shared_lock lock(*mutex_);
  std::vector<TreeObservation> out;
  for (std::size_t i = 0; i < trees_.size(); ++i)
    if (alive_[i]) out.push_back(trees_[i]);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::size_t GlobalTreeDb::size() const {
  std::shared_lock lock(*mutex_);
  return static_cast<std::size_t>(std::count(alive_.begin(), alive_.end(), 1));
}

TreeId GlobalTreeDb::next_id() const {
  std::shared_lock lock(*mutex_);
  return next_id_;
}

std::string GlobalTreeDb::save() const {
  const auto list = trees();
  std::string out;
  out.reserve(kHeaderBytes + kRecordBytes * list.size());
  Writer w(out);
  w.bytes(kMagic, 4);
  w.put<std::uint16_t>(kFormatVersion);
  w.put<std::uint64_t>(list.size());
  w.put<double>(merge_radius_);
  w.put<std::uint64_t>(static_cast<std::uint64_t>(next_id()));
  for (const auto& t : list) {
    w.put<std::uint64_t>(static_cast<std::uint64_t>(t.id));
    for (int k = 0; k < 3; ++k) w.put<float>(static_cast<float>(t.axis[k]));
    for (int k = 0; k < 3; ++k) w.put<double>(t.position[k]);
    w.put<float>(static_cast<float>(t.dbh));
    w.put<std::uint32_t>(t.obs_count);
    w.put<std::uint32_t>(t.is_candidate ? kFlagCandidate : 0u);
    w.put<std::uint64_t>(0);  // reserved
  }
  return out;
}

void GlobalTreeDb::save(std::ostream& os) const {
  const auto bytes = save();
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GlobalTreeDb GlobalTreeDb::load(const std::string& bytes) {
  Reader r(bytes);
  if (r.view(4) != std::string_view(kMagic, 4)) throw Error(ErrorCode::FormatError, "bad magic");
  const auto version = r.get<std::uint16_t>();
  if (version != kFormatVersion)
    throw Error(ErrorCode::FormatError, "unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint64_t>();
  const auto radius = r.get<double>();
  const auto next_id = r.get<std::uint64_t>();
  if (!(radius > 0)) throw Error(ErrorCode::FormatError, "invalid merge radius");
  if (count > r.remaining() / kRecordBytes || r.remaining() != count * kRecordBytes)
    throw Error(ErrorCode::FormatError, "record count does not match payload size");

  GlobalTreeDb db(radius);
  TreeId last = -1;
  for (std::uint64_t i = 0; i < count; ++i) {
    TreeObservation t;
    t.id = static_cast<TreeId>(r.get<std::uint64_t>());
    for (int k = 0; k < 3; ++k) t.axis[k] = r.get<float>();
    for (int k = 0; k < 3; ++k) t.position[k] = r.get<double>();
    t.dbh = r.get<float>();
    t.obs_count = r.get<std::uint32_t>();
    t.is_candidate = (r.get<std::uint32_t>() & kFlagCandidate) != 0;
    r.skip(8);
    if (t.id <= last || static_cast<std::uint64_t>(t.id) >= next_id)
      throw Error(ErrorCode::FormatError, "tree ids are not strictly increasing");
    if (!(std::abs(t.axis.norm() - 1.0) < 1e-5) || !(t.axis.z() >= 0) || !(t.dbh > 0))
      throw Error(ErrorCode::FormatError, "invalid tree record");
    last = t.id;
    db.trees_.push_back(t);
    db.alive_.push_back(1);
  }
  db.next_id_ = static_cast<TreeId>(next_id);
  db.rebuild_index();
  return db;
}

GlobalTreeDb GlobalTreeDb::load(std::istream& is) {
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return load(bytes);
}

void GlobalTreeDb::rebuild_index() {
  grid_ = SpatialGrid2D(merge_radius_);
  for (const auto& t : trees_) grid_.insert(t.center());
  for (std::size_t i = 0; i < trees_.size(); ++i)
    if (!alive_[i]) grid_.remove(static_cast<int>(i));
}

std::string GlobalTreeDb::export_text() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& t : trees())
    os << t.id << ' ' << t.position.x() << ' ' << t.position.y() << ' ' << t.position.z() << ' ' << t.axis.x()
       << ' ' << t.axis.y() << ' ' << t.axis.z() << ' ' << t.dbh << ' ' << t.obs_count << '\n';
  return os.str();
}

GlobalTreeDb GlobalTreeDb::import_text(const std::string& text, double merge_radius) {
  GlobalTreeDb db(merge_radius);
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    TreeObservation t;
    if (!(ls >> t.id >> t.position.x() >> t.position.y() >> t.position.z() >> t.axis.x() >> t.axis.y() >>
          t.axis.z() >> t.dbh >> t.obs_count))
      throw Error(ErrorCode::FormatError, "malformed tree line " + std::to_string(lineno));
    if (t.id < db.next_id_) throw Error(ErrorCode::FormatError, "tree ids must increase");
    t = quantize_for_storage(t);
    db.trees_.push_back(t);
    db.alive_.push_back(1);
    db.next_id_ = t.id + 1;
  }
  db.rebuild_index();
  return db;
}

bool GlobalTreeDb::operator==(const GlobalTreeDb& other) const {
  if (merge_radius_ != other.merge_radius_ || next_id() != other.next_id()) return false;
  const auto a = trees(), b = other.trees();
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto &x = a[i], &y = b[i];
    if (x.id != y.id || x.axis != y.axis || x.position != y.position || x.dbh != y.dbh ||
        x.obs_count != y.obs_count || x.is_candidate != y.is_candidate)
      return false;
  }
  return true;
}

}  // namespace treeloc
