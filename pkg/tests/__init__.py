# Test package for the subchannel virtual sensor
