"""The video being streamed: bitrate ladder and chunk sizes."""
