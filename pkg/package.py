name = "transmon_ppq"
title = "Transmon PPQ Simulator"
version = "1.0.0"
client_dir = "transmon_ppq"
