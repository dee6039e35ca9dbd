#ifndef FLOWRECT_SUITE_IO_HPP
#define FLOWRECT_SUITE_IO_HPP

#include <filesystem>
#include <vector>

#include "flowrect/dataset.hpp"
#include "flowrect/tensor_io.hpp"

namespace flowrect {

inline std::string clip_stem(std::int64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "clip_%03lld", static_cast<long long>(index));
    return buf;
}

// clip_NNN.frct, clip_NNN_flow.frcm ("FLOW" entry), clip_NNN_edit.frct
inline void save_clip_files(const std::filesystem::path& dir, std::int64_t index,
                            const ClipSample& clip) {
    const std::string stem = clip_stem(index);
    save_frames(dir / (stem + ".frct"), clip.clip);
    save_tensor(dir / (stem + "_edit.frct"), to_raw(clip.edited_first));
    if (clip.gt_flow.size() > 0)
        save_bundle(dir / (stem + "_flow.frcm"), "kind=ground-truth-flow",
                    {{"FLOW", to_raw(clip.gt_flow)}});
}

inline void write_suite_csv(const std::filesystem::path& path,
                            const std::vector<ClipSample>& clips) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "clip,token,edit_token,motion,velocity_x,velocity_y\n";
    for (std::size_t i = 0; i < clips.size(); ++i) {
        out << clip_stem(std::int64_t(i)) << "," << clips[i].token << "," << clips[i].edit_token
            << "," << to_string(clips[i].motion) << "," << clips[i].velocity_x << ","
            << clips[i].velocity_y << "\n";
    }
}

// Loads what editing needs: frames, edited frame, tokens. Ground-truth flow
// is loaded when present.
inline std::vector<ClipSample> load_suite(const std::filesystem::path& dir) {
    const auto csv = dir / "dataset.csv";
    std::ifstream in(csv);
    if (!in) throw IoError("cannot open suite index: " + csv.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<ClipSample> clips;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const auto next = line.find(',', pos);
            cols.push_back(line.substr(pos, next == std::string::npos ? next : next - pos));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
        if (cols.size() < 6) throw FormatError("malformed dataset.csv row: " + line, 0);
        ClipSample s;
        s.clip = load_frames(dir / (cols[0] + ".frct"));
        s.edited_first = from_raw_frame(load_tensor(dir / (cols[0] + "_edit.frct")), "edit frame");
        s.token = std::stoi(cols[1]);
        s.edit_token = std::stoi(cols[2]);
        s.motion = motion_from_string(cols[3]);
        s.velocity_x = std::stoll(cols[4]);
        s.velocity_y = std::stoll(cols[5]);
        const auto flow_path = dir / (cols[0] + "_flow.frcm");
        if (std::filesystem::exists(flow_path)) {
            Bundle b = load_bundle(flow_path);
            if (const NamedTensor* e = b.find("FLOW")) s.gt_flow = from_raw_rank4(e->tensor, "FLOW");
        }
        clips.push_back(std::move(s));
    }
    return clips;
}

}  // namespace flowrect

#endif
