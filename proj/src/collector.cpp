#include "graspforge/collector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;

namespace gf {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw std::runtime_error("bad number in csv: '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::vector<RegionOfInterest> occupancy_components(const Mask& occ) {
    std::vector<RegionOfInterest> out;
    std::vector<std::uint8_t> seen(occ.m.size(), 0);
    std::vector<int> stack;
    for (int r = 0; r < occ.h; ++r) {
        for (int c = 0; c < occ.w; ++c) {
            const std::size_t idx = static_cast<std::size_t>(r) * occ.w + c;
            if (!occ.m[idx] || seen[idx]) continue;
            int rmin = r, rmax = r, cmin = c, cmax = c;
            seen[idx] = 1;
            stack.push_back(static_cast<int>(idx));
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cr = cur / occ.w, cc = cur % occ.w;
                rmin = std::min(rmin, cr);
                rmax = std::max(rmax, cr);
                cmin = std::min(cmin, cc);
                cmax = std::max(cmax, cc);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) continue;
                        const int nr = cr + dr, nc = cc + dc;
                        if (nr < 0 || nr >= occ.h || nc < 0 || nc >= occ.w) continue;
                        const std::size_t nidx = static_cast<std::size_t>(nr) * occ.w + nc;
                        if (occ.m[nidx] && !seen[nidx]) {
                            seen[nidx] = 1;
                            stack.push_back(static_cast<int>(nidx));
                        }
                    }
                }
            }
            out.push_back({rmin, cmin, rmax - rmin + 1, cmax - cmin + 1});
        }
    }
    return out;
}

RegionOfInterest sample_roi(const std::vector<RegionOfInterest>& components, Rng& rng) {
    if (components.empty())
        throw std::runtime_error("sample_roi: empty workspace (no occupied pixels)");
    return components[rng.uniform_int(static_cast<int>(components.size()))];
}

RegionOfInterest sample_roi(const Mask& occupancy, Rng& rng) {
    return sample_roi(occupancy_components(occupancy), rng);
}

GraspConfig sample_grasp(const RegionOfInterest& roi, const Workspace& ws, Rng& rng) {
    const int r = roi.row0 + rng.uniform_int(roi.height);
    const int c = roi.col0 + rng.uniform_int(roi.width);
    GraspConfig g;
    g.x_mm = (c + 0.5) / ws.px_per_mm;
    g.y_mm = (r + 0.5) / ws.px_per_mm;
    g.theta_deg = rng.uniform(0.0, 180.0);
    return g;
}

TrialRecord execute_trial(const Scene& scene, const RenderResult& view,
                          const GraspConfig& grasp, const GripperSpec& gripper,
                          int stage, const std::string& scene_id,
                          const std::string& trial_id, const std::string& root_dir,
                          const CollectConfig& cfg, GraspOutcome* outcome_out) {
    const GraspOutcome outcome = grasp_oracle(scene, grasp, gripper);
    if (outcome_out) *outcome_out = outcome;

    TrialRecord rec;
    rec.scene_id = scene_id;
    rec.grasp = grasp;
    rec.label = outcome.success;
    rec.stage = stage;
    if (cfg.store_patches) {
        const Patch patch = extract_patch(view.image, grasp, gripper, scene.workspace, cfg.patch);
        const Image src = extract_source_crop(view.image, grasp, gripper, scene.workspace, cfg.patch);
        rec.patch_path = "patches/" + trial_id + ".pgm";
        rec.patch_src_path = "patches/" + trial_id + "_src.pgm";
        write_pgm(root_dir + "/" + rec.patch_path, patch.pixels);
        write_pgm(root_dir + "/" + rec.patch_src_path, src);
    }
    return rec;
}

namespace {

struct StreamResult {
    std::vector<TrialRecord> records;
};

// One logical collection stream: owns its RNG and scene sequence, writes its
// own scene/patch files. Pure function of (seed, stream, cfg, inputs).
StreamResult run_stream(int stream, int trials, const CollectConfig& cfg,
                        const std::vector<ObjectShape>& library, const Workspace& ws,
                        const GripperSpec& gripper, std::uint64_t seed,
                        const std::string& root_dir, int stage) {
    StreamResult res;
    Rng rng = Rng::derive(seed, rng_tag::kCollect, static_cast<std::uint64_t>(stream));
    Scene scene;
    RenderResult view;
    std::vector<RegionOfInterest> components;
    int scene_counter = 0;
    std::string scene_id;

    auto fresh_scene = [&]() {
        const std::uint64_t scene_seed =
            mix64(mix64(seed + 0x9e37) + (static_cast<std::uint64_t>(stream) << 32) +
                  static_cast<std::uint64_t>(scene_counter));
        scene = generate_scene(scene_seed, cfg.n_objects, library, ws, cfg.scene_gen);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "s%02d_%05d", stream, scene_counter);
        scene_id = buf;
        ++scene_counter;
        view = render(scene, cfg.background_shade);
        components = occupancy_components(view.occupancy);
        write_scene_file(root_dir + "/scenes/" + scene_id + ".txt", scene);
    };

    auto refresh_view = [&]() {
        view = render(scene, cfg.background_shade);
        components = occupancy_components(view.occupancy);
        char buf[80];
        std::snprintf(buf, sizeof(buf), "s%02d_%05d", stream, scene_counter);
        scene_id = buf;
        ++scene_counter;
        write_scene_file(root_dir + "/scenes/" + scene_id + ".txt", scene);
    };

    fresh_scene();
    int failure_streak = 0;
    for (int t = 0; t < trials; ++t) {
        // a scene whose leftovers are all ungraspable would absorb the rest
        // of the stream; the stall threshold guarantees fresh material
        if (static_cast<int>(scene.placements.size()) < cfg.min_objects ||
            (cfg.stall_refresh > 0 && failure_streak >= cfg.stall_refresh)) {
            fresh_scene();
            failure_streak = 0;
        }
        const RegionOfInterest roi = sample_roi(components, rng);
        const GraspConfig grasp = sample_grasp(roi, ws, rng);
        char tbuf[64];
        std::snprintf(tbuf, sizeof(tbuf), "t%02d_%06d", stream, t);
        GraspOutcome outcome;
        TrialRecord rec = execute_trial(scene, view, grasp, gripper, stage, scene_id,
                                        tbuf, root_dir, cfg, &outcome);
        res.records.push_back(std::move(rec));
        if (outcome.success && outcome.object_id) {
            scene = remove_object(scene, *outcome.object_id);
            refresh_view();
            failure_streak = 0;
        } else {
            ++failure_streak;
        }
    }
    return res;
}

}  // namespace

Dataset collect(const CollectConfig& cfg, const std::vector<ObjectShape>& library,
                const Workspace& ws, const GripperSpec& gripper, std::uint64_t seed,
                const std::string& root_dir, int workers, int stage) {
    if (cfg.n_trials < 1) throw std::invalid_argument("collect: n_trials < 1");
    if (cfg.streams < 1) throw std::invalid_argument("collect: streams < 1");
    fs::create_directories(root_dir + "/scenes");
    if (cfg.store_patches) fs::create_directories(root_dir + "/patches");

    const int streams = cfg.streams;
    std::vector<int> quota(streams, cfg.n_trials / streams);
    for (int s = 0; s < cfg.n_trials % streams; ++s) ++quota[s];

    std::vector<StreamResult> results(streams);
    workers = std::max(1, std::min(workers, streams));
    if (workers == 1) {
        for (int s = 0; s < streams; ++s)
            results[s] = run_stream(s, quota[s], cfg, library, ws, gripper, seed, root_dir, stage);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        std::mutex mtx;
        for (int wkr = 0; wkr < workers; ++wkr) {
            pool.emplace_back([&]() {
                for (;;) {
                    std::size_t s;
                    {
                        std::lock_guard<std::mutex> lk(mtx);
                        if (next >= results.size()) return;
                        s = next++;
                    }
                    results[s] = run_stream(static_cast<int>(s), quota[s], cfg, library, ws,
                                            gripper, seed, root_dir, stage);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    Dataset ds;
    ds.seed = seed;
    ds.root_dir = root_dir;
    for (StreamResult& r : results) {
        for (TrialRecord& rec : r.records) ds.records.push_back(std::move(rec));
    }
    return ds;
}

DatasetStats summarize(const Dataset& ds) {
    DatasetStats st;
    for (const TrialRecord& r : ds.records) {
        if (r.label)
            ++st.positives;
        else
            ++st.negatives;
    }
    st.total = st.positives + st.negatives;
    if (st.total > 0)
        st.grasp_rate = static_cast<double>(st.positives) / static_cast<double>(st.total);
    return st;
}

DatasetStats summarize(const Dataset& ds, int stage_filter) {
    Dataset filtered;
    for (const TrialRecord& r : ds.records) {
        if (r.stage == stage_filter) filtered.records.push_back(r);
    }
    return summarize(filtered);
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "scene_id,x_mm,y_mm,theta_deg,label,stage,patch_path\n";
    for (const TrialRecord& r : ds.records) {
        out << r.scene_id << "," << fmt_double(r.grasp.x_mm) << ","
            << fmt_double(r.grasp.y_mm) << "," << fmt_double(r.grasp.theta_deg) << ","
            << (r.label ? 1 : 0) << "," << r.stage << "," << r.patch_path << "\n";
    }
}

Dataset read_dataset_csv(const std::string& path, const std::string& root_dir) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    Dataset ds;
    ds.root_dir = root_dir;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset csv: " + path);
    if (line != "scene_id,x_mm,y_mm,theta_deg,label,stage,patch_path")
        throw std::runtime_error("unexpected dataset csv header: " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) {
                f.push_back(line.substr(pos));
                break;
            }
            f.push_back(line.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (f.size() != 7) throw std::runtime_error("bad dataset csv row: " + line);
        TrialRecord r;
        r.scene_id = f[0];
        r.grasp.x_mm = parse_double(f[1]);
        r.grasp.y_mm = parse_double(f[2]);
        r.grasp.theta_deg = parse_double(f[3]);
        r.label = f[4] == "1";
        r.stage = static_cast<int>(parse_double(f[5]));
        r.patch_path = f[6];
        if (r.patch_path.size() > 4 && r.patch_path.ends_with(".pgm"))
            r.patch_src_path = r.patch_path.substr(0, r.patch_path.size() - 4) + "_src.pgm";
        ds.records.push_back(std::move(r));
    }
    return ds;
}

Image load_patch(const Dataset& ds, const TrialRecord& rec) {
    return read_pgm(ds.root_dir + "/" + rec.patch_path);
}

Image load_source_crop(const Dataset& ds, const TrialRecord& rec) {
    return read_pgm(ds.root_dir + "/" + rec.patch_src_path);
}

}  // namespace gf
