#pragma once

// RIFF/WAVE reader and writer. Accepted input: mono 16 kHz, either 16-bit
// signed PCM or 32-bit IEEE float. Anything else is rejected with a
// descriptive error; there is no resampling or channel mixing. The writer
// emits 32-bit IEEE float.

#include <string>

#include "rtfs/stft.h"

namespace rtfs {

Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& wave);

}  // namespace rtfs
