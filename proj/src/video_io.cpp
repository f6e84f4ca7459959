#include "retistab/video_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "retistab/errors.hpp"
#include "retistab/parallel.hpp"

#include "json.hpp"

namespace fs = std::filesystem;

namespace retistab {
namespace {

constexpr const char* kManifestName = "meta.json";

std::string frame_file_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.png", index);
    return buf;
}

Frame decode_png(const fs::path& file, int index) {
    cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw CorruptInputError("failed to decode frame file: " + file.string());
    }
    Frame f;
    f.index = index;
    f.width = bgr.cols;
    f.height = bgr.rows;
    f.rgb.resize(static_cast<std::size_t>(f.width) * f.height * 3);
    for (int y = 0; y < f.height; ++y) {
        const std::uint8_t* src = bgr.ptr<std::uint8_t>(y);
        std::uint8_t* dst = f.rgb.data() + static_cast<std::size_t>(y) * f.width * 3;
        for (int x = 0; x < f.width; ++x) {
            dst[3 * x + 0] = src[3 * x + 2];
            dst[3 * x + 1] = src[3 * x + 1];
            dst[3 * x + 2] = src[3 * x + 0];
        }
    }
    return f;
}

void encode_png(const Frame& f, const fs::path& file) {
    cv::Mat bgr(f.height, f.width, CV_8UC3);
    for (int y = 0; y < f.height; ++y) {
        std::uint8_t* dst = bgr.ptr<std::uint8_t>(y);
        const std::uint8_t* src = f.rgb.data() + static_cast<std::size_t>(y) * f.width * 3;
        for (int x = 0; x < f.width; ++x) {
            dst[3 * x + 0] = src[3 * x + 2];
            dst[3 * x + 1] = src[3 * x + 1];
            dst[3 * x + 2] = src[3 * x + 0];
        }
    }
    std::vector<int> opts = {cv::IMWRITE_PNG_COMPRESSION, 1};
    if (!cv::imwrite(file.string(), bgr, opts)) {
        throw WriteError("failed to write frame file: " + file.string());
    }
}

VideoSequence load_directory(const fs::path& dir, int threads) {
    const fs::path manifest = dir / kManifestName;
    if (!fs::exists(manifest)) {
        throw InputFormatError("missing " + std::string(kManifestName) + " in " +
                               dir.string());
    }
    nlohmann::json meta;
    try {
        std::ifstream in(manifest);
        in >> meta;
    } catch (const std::exception& e) {
        throw InputFormatError("unreadable manifest " + manifest.string() + ": " +
                               e.what());
    }
    if (!meta.contains("fps") || !meta["fps"].is_number() ||
        meta["fps"].get<double>() <= 0.0) {
        throw InputFormatError("manifest must carry a positive fps");
    }

    VideoSequence seq;
    seq.fps = meta["fps"].get<double>();
    seq.source_id = meta.value("source_id", dir.filename().string());
    const int meta_w = meta.value("width", 0);
    const int meta_h = meta.value("height", 0);

    std::vector<fs::path> files;
    const std::regex name_re("^[0-9]{6}\\.png$");
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() &&
            std::regex_match(entry.path().filename().string(), name_re)) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw EmptyInputError("no frame files in " + dir.string());
    }

    seq.frames.resize(files.size());
    parallel_for(files.size(), threads, [&](std::size_t i) {
        seq.frames[i] = decode_png(files[i], static_cast<int>(i));
    });

    for (const Frame& f : seq.frames) {
        if (f.width != seq.frames.front().width ||
            f.height != seq.frames.front().height) {
            throw CorruptInputError("frame dimension mismatch in " + dir.string());
        }
    }
    if ((meta_w > 0 && meta_w != seq.width()) ||
        (meta_h > 0 && meta_h != seq.height())) {
        throw CorruptInputError("frame dimensions disagree with manifest in " +
                                dir.string());
    }
    return seq;
}

inline std::uint8_t clamp_u8(int v) {
    return static_cast<std::uint8_t>(v < 0 ? 0 : (v > 255 ? 255 : v));
}

// Limited-range BT.601.
inline void yuv_to_rgb(int y, int u, int v, std::uint8_t* out) {
    const int c = y - 16, d = u - 128, e = v - 128;
    out[0] = clamp_u8((298 * c + 409 * e + 128) >> 8);
    out[1] = clamp_u8((298 * c - 100 * d - 208 * e + 128) >> 8);
    out[2] = clamp_u8((298 * c + 516 * d + 128) >> 8);
}

VideoSequence load_y4m(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InputFormatError("cannot open " + file.string());

    std::string header;
    std::getline(in, header);
    if (header.rfind("YUV4MPEG2", 0) != 0) {
        throw InputFormatError("not a Y4M file: " + file.string());
    }

    int w = 0, h = 0;
    double fps = 0.0;
    std::string chroma = "420";
    std::istringstream hs(header);
    std::string tok;
    hs >> tok;  // magic
    while (hs >> tok) {
        if (tok.empty()) continue;
        switch (tok[0]) {
            case 'W': w = std::stoi(tok.substr(1)); break;
            case 'H': h = std::stoi(tok.substr(1)); break;
            case 'F': {
                const auto colon = tok.find(':');
                if (colon == std::string::npos) {
                    throw InputFormatError("bad Y4M frame rate: " + tok);
                }
                const double num = std::stod(tok.substr(1, colon - 1));
                const double den = std::stod(tok.substr(colon + 1));
                if (den <= 0) throw InputFormatError("bad Y4M frame rate: " + tok);
                fps = num / den;
                break;
            }
            case 'C': chroma = tok.substr(1); break;
            default: break;  // interlacing / aspect tags ignored
        }
    }
    if (w <= 0 || h <= 0 || fps <= 0.0) {
        throw InputFormatError("incomplete Y4M header in " + file.string());
    }
    const bool c444 = chroma.rfind("444", 0) == 0;
    const bool c420 = chroma.rfind("420", 0) == 0;
    if (!c444 && !c420) {
        throw InputFormatError("unsupported Y4M chroma C" + chroma);
    }
    const std::size_t ysize = static_cast<std::size_t>(w) * h;
    const std::size_t csize = c444 ? ysize : static_cast<std::size_t>((w + 1) / 2) * ((h + 1) / 2);
    const int cw = c444 ? w : (w + 1) / 2;

    VideoSequence seq;
    seq.fps = fps;
    seq.source_id = file.stem().string();

    std::vector<std::uint8_t> yp(ysize), up(csize), vp(csize);
    std::string frame_line;
    int index = 0;
    while (std::getline(in, frame_line)) {
        if (frame_line.rfind("FRAME", 0) != 0) {
            throw CorruptInputError("bad frame marker in " + file.string());
        }
        in.read(reinterpret_cast<char*>(yp.data()), static_cast<std::streamsize>(ysize));
        in.read(reinterpret_cast<char*>(up.data()), static_cast<std::streamsize>(csize));
        in.read(reinterpret_cast<char*>(vp.data()), static_cast<std::streamsize>(csize));
        if (!in) throw CorruptInputError("truncated Y4M frame in " + file.string());

        Frame f;
        f.index = index++;
        f.width = w;
        f.height = h;
        f.rgb.resize(ysize * 3);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t ci = c444
                    ? static_cast<std::size_t>(y) * w + x
                    : static_cast<std::size_t>(y / 2) * cw + x / 2;
                yuv_to_rgb(yp[static_cast<std::size_t>(y) * w + x], up[ci], vp[ci],
                           f.pixel(x, y));
            }
        }
        seq.frames.push_back(std::move(f));
    }
    if (seq.frames.empty()) {
        throw EmptyInputError("Y4M file holds no frames: " + file.string());
    }
    return seq;
}

}  // namespace

VideoSequence load_sequence(const fs::path& path, int threads) {
    if (fs::is_directory(path)) return load_directory(path, threads);
    if (fs::is_regular_file(path)) {
        if (path.extension() == ".y4m") return load_y4m(path);
        throw InputFormatError("unsupported input file (expect a frame directory "
                               "or .y4m): " + path.string());
    }
    throw InputFormatError("input path does not exist: " + path.string());
}

void save_sequence(const VideoSequence& seq, const fs::path& dir, int threads) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw WriteError("cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json meta = {
        {"fps", seq.fps},
        {"width", seq.width()},
        {"height", seq.height()},
        {"source_id", seq.source_id},
    };
    {
        std::ofstream out(dir / kManifestName);
        out << meta.dump(2) << "\n";
        if (!out) throw WriteError("cannot write manifest in " + dir.string());
    }
    parallel_for(seq.frames.size(), threads, [&](std::size_t i) {
        encode_png(seq.frames[i], dir / frame_file_name(static_cast<int>(i)));
    });
}

}  // namespace retistab
