"""Software optical camera communication link: LED transmitter, rolling-shutter camera, stripe decoder."""
