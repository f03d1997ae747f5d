#include "bcnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "bcnn/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace bcnn {

namespace {

constexpr std::uint32_t kMagic = 0x31574342u; // "BCW1"
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_i32(std::ostream& out, std::int32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_doubles(std::ostream& out, std::span<const double> values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}
void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::int32_t read_i32(std::istream& in) {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::string read_string(std::istream& in) {
    const std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

void write_spec(std::ostream& out, const ArchitectureSpec& spec) {
    write_i32(out, spec.input().height);
    write_i32(out, spec.input().width);
    write_i32(out, spec.input().channels);
    write_i32(out, spec.num_classes());
    write_i32(out, static_cast<std::int32_t>(spec.blocks().size()));
    for (const BlockSpec& b : spec.blocks()) {
        write_i32(out, b.conv.kernel_h);
        write_i32(out, b.conv.kernel_w);
        write_i32(out, b.conv.out_channels);
        write_i32(out, b.conv.stride);
        write_i32(out, b.conv.padding);
        write_i32(out, b.lrn.depth_radius);
        write_f64(out, b.lrn.bias_k);
        write_f64(out, b.lrn.alpha);
        write_f64(out, b.lrn.beta);
        write_i32(out, b.pool.window);
        write_i32(out, b.pool.stride);
    }
}

ArchitectureSpec read_spec(std::istream& in) {
    InputShape input;
    input.height = read_i32(in);
    input.width = read_i32(in);
    input.channels = read_i32(in);
    const int num_classes = read_i32(in);
    const int block_count = read_i32(in);
    std::vector<BlockSpec> blocks;
    for (int i = 0; i < block_count; ++i) {
        BlockSpec b;
        b.conv.kernel_h = read_i32(in);
        b.conv.kernel_w = read_i32(in);
        b.conv.out_channels = read_i32(in);
        b.conv.stride = read_i32(in);
        b.conv.padding = read_i32(in);
        b.lrn.depth_radius = read_i32(in);
        b.lrn.bias_k = read_f64(in);
        b.lrn.alpha = read_f64(in);
        b.lrn.beta = read_f64(in);
        b.pool.window = read_i32(in);
        b.pool.stride = read_i32(in);
        blocks.push_back(b);
    }
    return ArchitectureSpec(input, std::move(blocks), num_classes);
}

void write_named_tensor(std::ostream& out, const std::string& name,
                        std::span<const double> values) {
    write_string(out, name);
    write_u64(out, values.size());
    write_doubles(out, values);
}

} // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw OutputError("checkpoint: cannot open '" + path + "' for writing");
    }
    write_u32(out, kMagic);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(checkpoint.mode));
    write_u32(out, static_cast<std::uint32_t>(checkpoint.nets.size()));
    write_u32(out, checkpoint.svm.has_value() ? 1 : 0);
    for (const Network& net : checkpoint.nets) {
        write_u64(out, net.spec().hash());
        write_spec(out, net.spec());
        const auto& conv = net.conv_params();
        write_u32(out, static_cast<std::uint32_t>(2 * conv.size() + 2));
        for (std::size_t i = 0; i < conv.size(); ++i) {
            write_named_tensor(out, "conv_" + std::to_string(i + 1) + ".weights",
                               conv[i].weights.data());
            write_named_tensor(out, "conv_" + std::to_string(i + 1) + ".bias",
                               conv[i].bias.data());
        }
        write_named_tensor(out, "fc.weights", net.fc_weights().data);
        write_named_tensor(out, "fc.bias", net.fc_bias());
    }
    if (checkpoint.svm.has_value()) {
        write_f64(out, checkpoint.svm->lambda);
        write_f64(out, checkpoint.svm->bias);
        write_u64(out, checkpoint.svm->weights.size());
        write_doubles(out, checkpoint.svm->weights);
    }
    if (!out) {
        throw OutputError("checkpoint: write to '" + path + "' failed");
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("checkpoint: cannot open '" + path + "'");
    }
    if (read_u32(in) != kMagic) {
        throw DataError("checkpoint: '" + path + "' has wrong magic");
    }
    if (read_u32(in) != kVersion) {
        throw DataError("checkpoint: '" + path + "' has unsupported version");
    }
    Checkpoint checkpoint;
    checkpoint.mode = static_cast<RoutingMode>(read_u32(in));
    const std::uint32_t net_count = read_u32(in);
    const bool has_svm = read_u32(in) != 0;
    for (std::uint32_t n = 0; n < net_count; ++n) {
        const std::uint64_t stored_hash = read_u64(in);
        ArchitectureSpec spec = read_spec(in);
        if (spec.hash() != stored_hash) {
            throw DataError("checkpoint: spec hash mismatch in '" + path + "'");
        }
        Network net(spec);
        const std::uint32_t tensor_count = read_u32(in);
        for (std::uint32_t t = 0; t < tensor_count; ++t) {
            const std::string name = read_string(in);
            const std::uint64_t count = read_u64(in);
            std::span<double> dst;
            for (std::size_t i = 0; i < net.conv_params().size(); ++i) {
                const std::string idx = std::to_string(i + 1);
                if (name == "conv_" + idx + ".weights") {
                    dst = net.conv_params()[i].weights.data();
                } else if (name == "conv_" + idx + ".bias") {
                    dst = net.conv_params()[i].bias.data();
                }
            }
            if (name == "fc.weights") {
                dst = net.fc_weights().data;
            } else if (name == "fc.bias") {
                dst = net.fc_bias();
            }
            if (dst.empty() || dst.size() != count) {
                throw DataError("checkpoint: unexpected tensor '" + name + "' in '" + path + "'");
            }
            in.read(reinterpret_cast<char*>(dst.data()),
                    static_cast<std::streamsize>(count * sizeof(double)));
        }
        checkpoint.nets.push_back(std::move(net));
    }
    if (has_svm) {
        SvmModel svm;
        svm.lambda = read_f64(in);
        svm.bias = read_f64(in);
        const std::uint64_t count = read_u64(in);
        svm.weights.resize(count);
        in.read(reinterpret_cast<char*>(svm.weights.data()),
                static_cast<std::streamsize>(count * sizeof(double)));
        checkpoint.svm = std::move(svm);
    }
    if (!in) {
        throw DataError("checkpoint: '" + path + "' is truncated");
    }
    return checkpoint;
}

} // namespace bcnn
